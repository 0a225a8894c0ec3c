#include "intent_miner/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "intent_miner/errors.hpp"
#include "intent_miner/rng.hpp"

namespace intent_miner::head {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kProbClamp = 1e-12;

double sigmoid(double x) {
  double p;
  if (x >= 0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // Keep scores strictly inside (0, 1) even when the logit saturates.
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit, rng::Engine& eng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng::uniform(eng, -limit, limit);
  }
  return m;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix z = x * w;
  z.rowwise() += b.row(0);
  return z;
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* layer,
                   const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(layer) + " layer: " + what + " is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Batch gather(const Batch& b, std::span<const std::size_t> idx) {
  return Batch{gather_rows(b.title, idx), gather_rows(b.desc, idx), gather_rows(b.features, idx),
               gather_rows(b.targets, idx)};
}

bool all_finite(const HeadParams& p) {
  bool ok = true;
  p.for_each([&](std::string_view, Component, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return nlohmann::json{{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
      static_cast<std::size_t>(shape[0] * shape[1]) != data.size()) {
    throw ValidationError("tensor shape does not match its data");
  }
  Matrix m(shape[0], shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < shape[0]; ++r) {
    for (Eigen::Index c = 0; c < shape[1]; ++c) m(r, c) = data[k++];
  }
  if (!m.allFinite()) throw ValidationError("tensor has non-finite entries");
  return m;
}

}  // namespace

// ---- config -------------------------------------------------------------------

void HeadConfig::validate() const {
  if (embedding_dim == 0 || merge_dim == 0 || fusion_dim == 0) {
    throw ValidationError("layer dimensions must be positive");
  }
  if (!(lr_pooler > 0.0) || !(lr_head > 0.0)) throw ValidationError("learning rates must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
}

nlohmann::json HeadConfig::to_json() const {
  return nlohmann::json{{"embedding_dim", embedding_dim},
                        {"merge_dim", merge_dim},
                        {"fusion_dim", fusion_dim},
                        {"fine_tune_pooler", fine_tune_pooler},
                        {"learning_rates", {{"pooler", lr_pooler}, {"head", lr_head}}},
                        {"batch_size", batch_size},
                        {"max_epochs", max_epochs},
                        {"patience", patience},
                        {"seed", seed},
                        {"threshold", threshold}};
}

HeadConfig HeadConfig::from_json(const nlohmann::json& j) {
  HeadConfig c;
  try {
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.merge_dim = j.value("merge_dim", c.merge_dim);
    c.fusion_dim = j.value("fusion_dim", c.fusion_dim);
    c.fine_tune_pooler = j.value("fine_tune_pooler", c.fine_tune_pooler);
    if (auto it = j.find("learning_rates"); it != j.end()) {
      c.lr_pooler = it->value("pooler", c.lr_pooler);
      c.lr_head = it->value("head", c.lr_head);
    }
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.threshold = j.value("threshold", c.threshold);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed head config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- params ---------------------------------------------------------------------

void HeadParams::for_each(const std::function<void(std::string_view, Component, Matrix&)>& fn) {
  if (has_pooler()) {
    fn("pooler_w", Component::kPooler, pooler_w);
    fn("pooler_b", Component::kPooler, pooler_b);
  }
  fn("merge_w", Component::kHead, merge_w);
  fn("merge_b", Component::kHead, merge_b);
  fn("fusion_w", Component::kHead, fusion_w);
  fn("fusion_b", Component::kHead, fusion_b);
  fn("output_w", Component::kHead, output_w);
  fn("output_b", Component::kHead, output_b);
}

void HeadParams::for_each(const std::function<void(std::string_view, Component, const Matrix&)>& fn) const {
  const_cast<HeadParams*>(this)->for_each(
      [&](std::string_view name, Component c, Matrix& m) { fn(name, c, m); });
}

HeadParams HeadParams::zeros_like() const {
  HeadParams z = *this;
  z.for_each([](std::string_view, Component, Matrix& m) { m.setZero(); });
  return z;
}

HeadModel init_model(const HeadConfig& config, std::uint64_t seed) {
  config.validate();
  rng::Engine eng(seed);
  const auto E = static_cast<Eigen::Index>(config.embedding_dim);
  const auto M = static_cast<Eigen::Index>(config.merge_dim);
  const auto F = static_cast<Eigen::Index>(config.fusion_dim);
  const auto X = static_cast<Eigen::Index>(features::kFeatureDim);
  const auto C = static_cast<Eigen::Index>(kNumIntentions);

  HeadModel model;
  model.config = config;
  auto& p = model.params;
  if (config.fine_tune_pooler) {
    p.pooler_w = Matrix::Identity(E, E);
    p.pooler_b = Matrix::Zero(1, E);
  }
  p.merge_w = uniform_matrix(2 * E, M, std::sqrt(6.0 / static_cast<double>(2 * E)), eng);
  p.merge_b = Matrix::Zero(1, M);
  p.fusion_w = uniform_matrix(M + X, F, std::sqrt(6.0 / static_cast<double>(M + X)), eng);
  p.fusion_b = Matrix::Zero(1, F);
  p.output_w = uniform_matrix(F, C, std::sqrt(6.0 / static_cast<double>(F + C)), eng);
  p.output_b = Matrix::Zero(1, C);
  return model;
}

// ---- forward / loss / backward -----------------------------------------------------

ForwardTrace forward_batch(const HeadParams& p, const Matrix& title, const Matrix& desc,
                           const Matrix& features) {
  const auto B = title.rows();
  const auto E = title.cols();
  require_shape(desc, B, E, "input", "description embedding batch");
  if (features.rows() != B) throw ShapeError("input layer: feature batch has a different row count");

  ForwardTrace t;
  if (p.has_pooler()) {
    require_shape(p.pooler_w, E, E, "pooler", "weight");
    require_shape(p.pooler_b, 1, E, "pooler", "bias");
    t.title_pooled = affine(title, p.pooler_w, p.pooler_b).array().tanh().matrix();
    t.desc_pooled = affine(desc, p.pooler_w, p.pooler_b).array().tanh().matrix();
  } else {
    t.title_pooled = title;
    t.desc_pooled = desc;
  }

  const auto M = p.merge_w.cols();
  require_shape(p.merge_w, 2 * E, M, "merge", "weight");
  require_shape(p.merge_b, 1, M, "merge", "bias");
  t.concat.resize(B, 2 * E);
  t.concat << t.title_pooled, t.desc_pooled;
  t.merge_pre = affine(t.concat, p.merge_w, p.merge_b);
  t.merge_act = t.merge_pre.cwiseMax(0.0);

  const auto F = p.fusion_w.cols();
  require_shape(p.fusion_w, M + features.cols(), F, "fusion", "weight");
  require_shape(p.fusion_b, 1, F, "fusion", "bias");
  t.fusion_in.resize(B, M + features.cols());
  t.fusion_in << t.merge_act, features;
  t.fusion_pre = affine(t.fusion_in, p.fusion_w, p.fusion_b);
  t.fusion_act = t.fusion_pre.cwiseMax(0.0);

  const auto C = static_cast<Eigen::Index>(kNumIntentions);
  require_shape(p.output_w, F, C, "output", "weight");
  require_shape(p.output_b, 1, C, "output", "bias");
  t.logits = affine(t.fusion_act, p.output_w, p.output_b);
  t.probs = t.logits.unaryExpr([](double x) { return sigmoid(x); });
  return t;
}

PredictionScores forward(const HeadModel& model, std::span<const double> title_emb,
                         std::span<const double> desc_emb, const features::FeatureVector& features) {
  const auto E = static_cast<Eigen::Index>(model.config.embedding_dim);
  if (static_cast<Eigen::Index>(title_emb.size()) != E || static_cast<Eigen::Index>(desc_emb.size()) != E) {
    throw ShapeError("input layer: embedding dimension does not match the configured " +
                     std::to_string(E));
  }
  Matrix title = Eigen::Map<const Eigen::RowVectorXd>(title_emb.data(), E);
  Matrix desc = Eigen::Map<const Eigen::RowVectorXd>(desc_emb.data(), E);
  Matrix feats = Eigen::Map<const Eigen::RowVectorXd>(features.values.data(),
                                                      static_cast<Eigen::Index>(features.values.size()));
  const auto trace = forward_batch(model.params, title, desc, feats);
  PredictionScores s{};
  for (std::size_t c = 0; c < kNumIntentions; ++c) s[c] = trace.probs(0, static_cast<Eigen::Index>(c));
  return s;
}

double loss(const PredictionScores& scores, IntentionLabelSet target) {
  double total = 0.0;
  for (std::size_t c = 0; c < kNumIntentions; ++c) {
    const double p = std::clamp(scores[c], kProbClamp, 1.0 - kProbClamp);
    total -= target.contains_index(c) ? std::log(p) : std::log(1.0 - p);
  }
  return total;
}

double batch_loss(const Matrix& probs, const Matrix& targets) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols()) {
    throw ShapeError("loss: probability and target shapes differ");
  }
  if (probs.rows() == 0) return 0.0;
  const auto p = probs.array().max(kProbClamp).min(1.0 - kProbClamp);
  const auto y = targets.array();
  const double total = -(y * p.log() + (1.0 - y) * (1.0 - p).log()).sum();
  return total / static_cast<double>(probs.rows());
}

BackwardResult backward(const HeadParams& p, const Batch& batch) {
  const auto t = forward_batch(p, batch.title, batch.desc, batch.features);
  require_shape(batch.targets, batch.size(), static_cast<Eigen::Index>(kNumIntentions), "output",
                "target batch");
  BackwardResult r;
  r.loss = batch_loss(t.probs, batch.targets);
  auto& g = r.grads;
  g = p.zeros_like();

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const Matrix d_logits = (t.probs - batch.targets) * inv_b;
  g.output_w = t.fusion_act.transpose() * d_logits;
  g.output_b = d_logits.colwise().sum();

  const Matrix d_fusion_pre = (d_logits * p.output_w.transpose()).cwiseProduct(relu_mask(t.fusion_pre));
  g.fusion_w = t.fusion_in.transpose() * d_fusion_pre;
  g.fusion_b = d_fusion_pre.colwise().sum();

  const auto M = p.merge_w.cols();
  const Matrix d_fusion_in = d_fusion_pre * p.fusion_w.transpose();
  const Matrix d_merge_pre = d_fusion_in.leftCols(M).cwiseProduct(relu_mask(t.merge_pre));
  g.merge_w = t.concat.transpose() * d_merge_pre;
  g.merge_b = d_merge_pre.colwise().sum();

  if (p.has_pooler()) {
    const auto E = batch.title.cols();
    const Matrix d_concat = d_merge_pre * p.merge_w.transpose();
    const Matrix d_title_pre =
        d_concat.leftCols(E).cwiseProduct((1.0 - t.title_pooled.array().square()).matrix());
    const Matrix d_desc_pre =
        d_concat.rightCols(E).cwiseProduct((1.0 - t.desc_pooled.array().square()).matrix());
    g.pooler_w = batch.title.transpose() * d_title_pre + batch.desc.transpose() * d_desc_pre;
    g.pooler_b = d_title_pre.colwise().sum() + d_desc_pre.colwise().sum();
  }
  return r;
}

IntentionLabelSet refine(const PredictionScores& scores, double threshold) {
  IntentionLabelSet out;
  std::size_t best = 0;
  for (std::size_t c = 0; c < kNumIntentions; ++c) {
    if (scores[c] > threshold) out.insert(static_cast<Intention>(c));
    if (scores[c] > scores[best]) best = c;
  }
  if (out.empty()) out.insert(static_cast<Intention>(best));
  if (out.contains(Intention::kOther)) out = IntentionLabelSet{Intention::kOther};
  return out;
}

// ---- training --------------------------------------------------------------------------

HeadParams train_params(const HeadConfig& config, const Batch& train, const Batch& validation,
                        TrainingLog* log) {
  config.validate();
  if (train.size() == 0) throw ValidationError("training set is empty");
  if (validation.size() == 0) throw ValidationError("validation set is empty");

  HeadParams params = init_model(config, config.seed).params;
  HeadParams m = params.zeros_like();
  HeadParams v = params.zeros_like();
  HeadParams best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t since_best = 0;
  std::uint64_t step = 0;

  TrainingLog local_log;
  rng::Engine eng(config.seed ^ 0x6a09e667f3bcc908ULL);
  std::vector<std::size_t> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng::shuffle(std::span(order), eng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      auto result = backward(params, gather(train, idx));
      if (!std::isfinite(result.loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                            " (learning rate too high?)");
      }
      loss_sum += result.loss * static_cast<double>(idx.size());

      ++step;
      const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      std::vector<Matrix*> ps, ms, vs, gs;
      std::vector<Component> comps;
      params.for_each([&](std::string_view, Component c, Matrix& x) {
        ps.push_back(&x);
        comps.push_back(c);
      });
      m.for_each([&](std::string_view, Component, Matrix& x) { ms.push_back(&x); });
      v.for_each([&](std::string_view, Component, Matrix& x) { vs.push_back(&x); });
      result.grads.for_each([&](std::string_view, Component, Matrix& x) { gs.push_back(&x); });
      for (std::size_t k = 0; k < ps.size(); ++k) {
        const double lr = comps[k] == Component::kPooler ? config.lr_pooler : config.lr_head;
        *ms[k] = kAdamBeta1 * *ms[k] + (1.0 - kAdamBeta1) * *gs[k];
        *vs[k] = kAdamBeta2 * *vs[k] + (1.0 - kAdamBeta2) * gs[k]->cwiseProduct(*gs[k]);
        ps[k]->array() -= lr * (ms[k]->array() / bc1) / ((vs[k]->array() / bc2).sqrt() + kAdamEps);
      }
    }
    if (!all_finite(params)) {
      throw TrainingError("non-finite weights at epoch " + std::to_string(epoch) +
                          " (learning rate too high?)");
    }

    const double train_loss = loss_sum / static_cast<double>(order.size());
    const auto val_trace = forward_batch(params, validation.title, validation.desc, validation.features);
    const double val_loss = batch_loss(val_trace.probs, validation.targets);
    if (!std::isfinite(val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    local_log.epochs.push_back({epoch, train_loss, val_loss});

    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = params;
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      local_log.stopped_early = true;
      break;
    }
  }
  local_log.best_epoch = best_epoch;
  local_log.best_validation_loss = best_loss;
  if (log) *log = std::move(local_log);
  return best;
}

// ---- pipeline ----------------------------------------------------------------------------

features::FeatureExtractor IntentModel::extractor() const {
  return features::FeatureExtractor(code_classifier, lexicon);
}

nlohmann::json to_json(const IntentModel& model) {
  nlohmann::json tensors = nlohmann::json::object();
  model.head.params.for_each(
      [&](std::string_view name, Component, const Matrix& m) { tensors[std::string(name)] = matrix_to_json(m); });
  nlohmann::json lexicon = nlohmann::json::object();
  for (const auto& [word, valence] : model.lexicon.entries()) lexicon[word] = valence;
  return nlohmann::json{
      {"format", "intent-miner/model"},
      {"format_version", kModelFormatVersion},
      {"config", model.head.config.to_json()},
      {"provider", model.head.provider.to_json()},
      {"standardizer", model.head.standardizer.to_json()},
      {"tensors", tensors},
      {"codeblock", model.code_classifier ? codeblock::to_json(*model.code_classifier) : nlohmann::json()},
      {"lexicon", lexicon},
  };
}

IntentModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format_version", 0) != kModelFormatVersion) {
      throw ValidationError("unsupported model format version");
    }
    IntentModel model;
    model.head.config = HeadConfig::from_json(j.at("config"));
    model.head.provider = embedding::ProviderSpec::from_json(j.at("provider"));
    model.head.standardizer = features::Standardizer::from_json(j.at("standardizer"));
    const auto& t = j.at("tensors");
    auto& p = model.head.params;
    if (model.head.config.fine_tune_pooler) {
      p.pooler_w = matrix_from_json(t.at("pooler_w"));
      p.pooler_b = matrix_from_json(t.at("pooler_b"));
    }
    p.merge_w = matrix_from_json(t.at("merge_w"));
    p.merge_b = matrix_from_json(t.at("merge_b"));
    p.fusion_w = matrix_from_json(t.at("fusion_w"));
    p.fusion_b = matrix_from_json(t.at("fusion_b"));
    p.output_w = matrix_from_json(t.at("output_w"));
    p.output_b = matrix_from_json(t.at("output_b"));
    if (j.contains("codeblock") && !j.at("codeblock").is_null()) {
      model.code_classifier = codeblock::classifier_from_json(j.at("codeblock"));
    }
    std::unordered_map<std::string, double> lex;
    for (const auto& [word, valence] : j.at("lexicon").items()) lex[word] = valence.get<double>();
    model.lexicon = features::Lexicon(std::move(lex));

    // Validate shapes once with a dummy pass.
    const auto E = static_cast<Eigen::Index>(model.head.config.embedding_dim);
    forward_batch(p, Matrix::Zero(1, E), Matrix::Zero(1, E),
                  Matrix::Zero(1, static_cast<Eigen::Index>(features::kFeatureDim)));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const IntentModel& model) {
  write_file(path, to_json(model).dump());
}

IntentModel load_model(const std::filesystem::path& path) {
  const auto text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file: ") + e.what(), 0);
  }
  return model_from_json(j);
}

EncodedPost encode(const preprocess::CleanPost& post, embedding::EmbeddingProvider& provider,
                   const features::FeatureExtractor& extractor) {
  EncodedPost e;
  e.title = provider.embed(post.title_text);
  e.desc = provider.embed(post.description_text);
  e.raw_features = extractor.raw(post);
  return e;
}

Batch make_batch(std::span<const EncodedPost> posts, std::span<const IntentionLabelSet> labels,
                 const features::Standardizer& standardizer, std::size_t embedding_dim) {
  const auto B = static_cast<Eigen::Index>(posts.size());
  const auto E = static_cast<Eigen::Index>(embedding_dim);
  const auto X = static_cast<Eigen::Index>(features::kFeatureDim);
  Batch b;
  b.title.resize(B, E);
  b.desc.resize(B, E);
  b.features.resize(B, X);
  if (!labels.empty()) {
    if (labels.size() != posts.size()) throw ValidationError("post and label counts differ");
    b.targets.resize(B, static_cast<Eigen::Index>(kNumIntentions));
  }
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto& p = posts[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(p.title.size()) != E || static_cast<Eigen::Index>(p.desc.size()) != E) {
      throw ShapeError("input layer: embedding dimension does not match the configured " + std::to_string(E));
    }
    b.title.row(i) = Eigen::Map<const Eigen::RowVectorXd>(p.title.data(), E);
    b.desc.row(i) = Eigen::Map<const Eigen::RowVectorXd>(p.desc.data(), E);
    const auto f = standardizer.apply(p.raw_features);
    b.features.row(i) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), X);
    if (!labels.empty()) {
      const auto y = labels[static_cast<std::size_t>(i)].indicator();
      b.targets.row(i) = Eigen::Map<const Eigen::RowVectorXd>(y.data(), static_cast<Eigen::Index>(kNumIntentions));
    }
  }
  return b;
}

IntentModel train(const HeadConfig& config, std::span<const EncodedPost> train_posts,
                  std::span<const IntentionLabelSet> train_labels,
                  std::span<const EncodedPost> validation_posts,
                  std::span<const IntentionLabelSet> validation_labels,
                  const embedding::ProviderSpec& provider,
                  std::optional<codeblock::CodeBlockClassifier> code_classifier,
                  features::Lexicon lexicon, TrainingLog* log) {
  if (train_labels.size() != train_posts.size() || validation_labels.size() != validation_posts.size()) {
    throw ValidationError("post and label counts differ");
  }
  if (train_posts.empty() || validation_posts.empty()) {
    throw ValidationError("training and validation sets must be non-empty");
  }
  std::vector<features::RawFeatures> raw;
  raw.reserve(train_posts.size());
  for (const auto& p : train_posts) raw.push_back(p.raw_features);

  IntentModel model;
  model.head.config = config;
  model.head.provider = provider;
  model.head.standardizer = features::Standardizer::fit(raw);
  model.code_classifier = std::move(code_classifier);
  model.lexicon = std::move(lexicon);

  const auto train_batch = make_batch(train_posts, train_labels, model.head.standardizer, config.embedding_dim);
  const auto val_batch =
      make_batch(validation_posts, validation_labels, model.head.standardizer, config.embedding_dim);
  model.head.params = train_params(config, train_batch, val_batch, log);
  return model;
}

Prediction predict(const IntentModel& model, const EncodedPost& encoded) {
  Prediction p;
  p.scores = forward(model.head, encoded.title, encoded.desc,
                     features::FeatureVector{model.head.standardizer.apply(encoded.raw_features)});
  p.labels = refine(p.scores, model.head.config.threshold);
  return p;
}

Prediction predict(const IntentModel& model, const preprocess::CleanPost& post,
                   embedding::EmbeddingProvider& provider) {
  if (provider.spec().dimension != model.head.config.embedding_dim) {
    throw ShapeError("input layer: provider dimension " + std::to_string(provider.spec().dimension) +
                     " does not match the model's " + std::to_string(model.head.config.embedding_dim));
  }
  return predict(model, encode(post, provider, model.extractor()));
}

}  // namespace intent_miner::head
