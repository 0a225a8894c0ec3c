#include "intent_miner/codeblock.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "intent_miner/errors.hpp"
#include "intent_miner/rng.hpp"

namespace intent_miner::codeblock {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_'; }
bool is_bracket(char c) {
  return c == '(' || c == ')' || c == '[' || c == ']' || c == '{' || c == '}';
}
bool is_operator_char(unsigned char c) {
  return c < 0x80 && std::ispunct(c) && c != '_' && !is_bracket(static_cast<char>(c));
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

CodeTokenStream lex_code(std::string_view text) {
  CodeTokenStream out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < n) {
    const unsigned char c = at(i);
    const std::size_t start = i;
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(at(i))) ++i;
    } else if (std::isdigit(c)) {
      // 42, 3.14, 0x1F, 1e10
      while (i < n && is_ident_char(at(i))) ++i;
      while (i + 1 < n && text[i] == '.' && std::isdigit(at(i + 1))) {
        ++i;
        while (i < n && is_ident_char(at(i))) ++i;
      }
    } else if (is_bracket(static_cast<char>(c))) {
      ++i;
    } else if (is_operator_char(c)) {
      while (i < n && is_operator_char(at(i))) ++i;
    } else {
      // Non-ASCII and control bytes: group the run as one opaque token.
      while (i < n && at(i) >= 0x80) ++i;
      if (i == start) {
        ++i;
        continue;
      }
    }
    out.tokens.emplace_back(text.substr(start, i - start));
  }
  return out;
}

double SparseVector::dot(const SparseVector& other) const {
  double s = 0.0;
  std::size_t a = 0;
  std::size_t b = 0;
  while (a < indices.size() && b < other.indices.size()) {
    if (indices[a] == other.indices[b]) {
      s += values[a++] * other.values[b++];
    } else if (indices[a] < other.indices[b]) {
      ++a;
    } else {
      ++b;
    }
  }
  return s;
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

double squared_distance(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.nnz() || j < b.nnz()) {
    double d;
    if (j >= b.nnz() || (i < a.nnz() && a.indices[i] < b.indices[j])) {
      d = a.values[i++];
    } else if (i >= a.nnz() || b.indices[j] < a.indices[i]) {
      d = b.values[j++];
    } else {
      d = a.values[i++] - b.values[j++];
    }
    s += d * d;
  }
  return s;
}

TfidfModel fit_tfidf(std::span<const CodeTokenStream> corpus) {
  if (corpus.empty()) throw ValidationError("cannot fit TF-IDF on an empty corpus");
  TfidfModel model;
  model.document_count = corpus.size();
  std::vector<std::size_t> df;
  std::vector<std::size_t> last_doc;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const auto& tok : corpus[d].tokens) {
      auto [it, inserted] =
          model.vocabulary.emplace(tok, static_cast<std::uint32_t>(model.vocabulary.size()));
      if (inserted) {
        df.push_back(0);
        last_doc.push_back(std::numeric_limits<std::size_t>::max());
      }
      const auto col = it->second;
      if (last_doc[col] != d) {
        last_doc[col] = d;
        ++df[col];
      }
    }
  }
  const double n = static_cast<double>(model.document_count);
  model.idf.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) {
    model.idf[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  return model;
}

SparseVector transform(const TfidfModel& model, const CodeTokenStream& stream) {
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : stream.tokens) {
    if (auto it = model.vocabulary.find(tok); it != model.vocabulary.end()) {
      counts[it->second] += 1.0;
    }
  }
  SparseVector v;
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * model.idf[col];
    v.indices.push_back(col);
    v.values.push_back(w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& w : v.values) w *= inv;
  }
  return v;
}

std::vector<SparseVector> smote(std::span<const SparseVector> samples, std::size_t k,
                                std::size_t amount, std::uint64_t seed) {
  if (samples.size() < 2) throw ValidationError("SMOTE needs at least two samples in a class");
  if (k == 0) throw ValidationError("SMOTE neighbour count must be at least 1");
  k = std::min(k, samples.size() - 1);

  std::vector<std::vector<std::size_t>> neighbours(samples.size());
  auto neighbours_of = [&](std::size_t i) -> const std::vector<std::size_t>& {
    auto& nn = neighbours[i];
    if (!nn.empty()) return nn;
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(samples.size() - 1);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (j != i) dist.emplace_back(squared_distance(samples[i], samples[j]), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t r = 0; r < k; ++r) nn.push_back(dist[r].second);
    return nn;
  };

  rng::Engine eng(seed);
  std::vector<SparseVector> out;
  out.reserve(amount);
  for (std::size_t s = 0; s < amount; ++s) {
    const auto base = static_cast<std::size_t>(rng::below(eng, samples.size()));
    const auto& nn = neighbours_of(base);
    const auto other = nn[static_cast<std::size_t>(rng::below(eng, nn.size()))];
    const double t = rng::uniform_closed01(eng);

    const auto& x = samples[base];
    const auto& y = samples[other];
    SparseVector syn;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < x.nnz() || j < y.nnz()) {
      std::uint32_t idx;
      double xv = 0.0;
      double yv = 0.0;
      if (j >= y.nnz() || (i < x.nnz() && x.indices[i] < y.indices[j])) {
        idx = x.indices[i];
        xv = x.values[i++];
      } else if (i >= x.nnz() || y.indices[j] < x.indices[i]) {
        idx = y.indices[j];
        yv = y.values[j++];
      } else {
        idx = x.indices[i];
        xv = x.values[i++];
        yv = y.values[j++];
      }
      const double v = xv + t * (yv - xv);
      if (v != 0.0) {
        syn.indices.push_back(idx);
        syn.values.push_back(v);
      }
    }
    out.push_back(std::move(syn));
  }
  return out;
}

NaiveBayesModel train_nb(std::span<const SparseVector> X, std::span<const ContentCategory> y,
                         std::span<const ContentCategory> classes, std::size_t vocabulary_size,
                         double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("additive smoothing alpha must be positive");
  if (X.size() != y.size()) throw ValidationError("sample and label counts differ");
  if (classes.empty()) throw ValidationError("naive Bayes needs at least one class");
  if (vocabulary_size == 0) throw ValidationError("naive Bayes needs a non-empty vocabulary");

  NaiveBayesModel model;
  model.classes.assign(classes.begin(), classes.end());
  model.vocabulary_size = vocabulary_size;
  model.alpha = alpha;

  const std::size_t C = classes.size();
  std::vector<std::size_t> row_of(kNumContentCategories, C);
  for (std::size_t r = 0; r < C; ++r) row_of[index_of(classes[r])] = r;

  std::vector<double> counts(C * vocabulary_size, 0.0);
  std::vector<std::size_t> docs(C, 0);
  for (std::size_t d = 0; d < X.size(); ++d) {
    const auto r = row_of[index_of(y[d])];
    if (r == C) {
      throw ValidationError("label '" + std::string(to_code(y[d])) + "' is not a model class");
    }
    ++docs[r];
    for (std::size_t k = 0; k < X[d].nnz(); ++k) {
      if (X[d].indices[k] >= vocabulary_size) throw ValidationError("feature index out of range");
      counts[r * vocabulary_size + X[d].indices[k]] += X[d].values[k];
    }
  }
  for (std::size_t r = 0; r < C; ++r) {
    if (docs[r] == 0) {
      throw ValidationError("class '" + std::string(to_code(classes[r])) +
                            "' has no training samples");
    }
  }

  model.class_log_priors.resize(C);
  model.feature_log_likelihoods.resize(C * vocabulary_size);
  const double total_docs = static_cast<double>(X.size());
  const double smoothing_mass = alpha * static_cast<double>(vocabulary_size);
  for (std::size_t r = 0; r < C; ++r) {
    model.class_log_priors[r] = std::log(static_cast<double>(docs[r]) / total_docs);
    double row_total = 0.0;
    for (std::size_t t = 0; t < vocabulary_size; ++t) row_total += counts[r * vocabulary_size + t];
    const double log_denom = std::log(row_total + smoothing_mass);
    for (std::size_t t = 0; t < vocabulary_size; ++t) {
      model.feature_log_likelihoods[r * vocabulary_size + t] =
          std::log(counts[r * vocabulary_size + t] + alpha) - log_denom;
    }
  }
  return model;
}

std::vector<double> joint_log_likelihood(const NaiveBayesModel& model, const SparseVector& x) {
  std::vector<double> jll(model.classes.size());
  for (std::size_t r = 0; r < model.classes.size(); ++r) {
    const auto row = model.log_likelihood_row(r);
    double s = model.class_log_priors[r];
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      if (x.indices[k] < row.size()) s += x.values[k] * row[x.indices[k]];
    }
    jll[r] = s;
  }
  return jll;
}

ContentCategoryDistribution predict_proba(const NaiveBayesModel& model, const SparseVector& x) {
  const auto jll = joint_log_likelihood(model, x);
  const double norm = log_sum_exp(jll);
  ContentCategoryDistribution out{};
  for (std::size_t r = 0; r < jll.size(); ++r) out[index_of(model.classes[r])] = std::exp(jll[r] - norm);
  return out;
}

double threshold_accuracy(const NaiveBayesModel& model, std::span<const LabeledVector> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const auto p = predict_proba(model, s.x);
    const bool hit = std::any_of(s.truth.begin(), s.truth.end(),
                                 [&](ContentCategory c) { return p[index_of(c)] > 0.5; });
    if (hit) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double grid_search_alpha(std::span<const SparseVector> train_X,
                         std::span<const ContentCategory> train_y,
                         std::span<const ContentCategory> classes, std::size_t vocabulary_size,
                         std::span<const LabeledVector> validation, std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("alpha grid is empty");
  double best_alpha = 0.0;
  double best_acc = -1.0;
  for (double alpha : grid) {
    const auto model = train_nb(train_X, train_y, classes, vocabulary_size, alpha);
    const double acc = threshold_accuracy(model, validation);
    if (acc > best_acc || (acc == best_acc && alpha < best_alpha)) {
      best_acc = acc;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

ContentCategoryDistribution predict_content(const NaiveBayesModel& model, const TfidfModel& tfidf,
                                            std::string_view block_text) {
  return predict_proba(model, transform(tfidf, lex_code(block_text)));
}

ContentCategoryDistribution predict_content(const CodeBlockClassifier& clf,
                                            std::span<const std::string> blocks) {
  if (blocks.empty()) {
    ContentCategoryDistribution d{};
    d[index_of(ContentCategory::kNaturalLanguage)] = 1.0;
    return d;
  }
  std::string joined;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) joined += '\n';
    joined += blocks[i];
  }
  return predict_content(clf.nb, clf.tfidf, joined);
}

// ---- corpus ----------------------------------------------------------------

std::vector<CodeBlockSample> parse_corpus(std::string_view jsonl) {
  std::vector<CodeBlockSample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CodeBlockSample s;
      s.text = j.at("text").get<std::string>();
      for (const auto& c : j.at("categories")) {
        s.categories.push_back(parse_content_category(c.get<std::string>()));
      }
      if (s.categories.empty()) throw ValidationError("empty 'categories' array");
      if (auto it = j.find("post_id"); it != j.end() && it->is_string()) s.post_id = it->get<std::string>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<CodeBlockSample> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path));
}

CodeBlockClassifier train_classifier(std::span<const CodeBlockSample> corpus,
                                     const TrainingOptions& options, TrainingReport* report) {
  if (corpus.size() < 3) throw ValidationError("code-block corpus needs at least 3 samples");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  rng::Engine eng(options.seed);
  rng::shuffle(std::span(order), eng);

  const auto n = corpus.size();
  auto n_train = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(n)));
  auto n_val = static_cast<std::size_t>(std::floor(options.validation_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  n_val = std::min(n_val, n - n_train);

  std::vector<CodeTokenStream> train_tokens;
  train_tokens.reserve(n_train);
  for (std::size_t i = 0; i < n_train; ++i) train_tokens.push_back(lex_code(corpus[order[i]].text));

  CodeBlockClassifier clf;
  clf.tfidf = fit_tfidf(train_tokens);
  const auto V = clf.tfidf.dimension();
  if (V == 0) throw ValidationError("code-block training split has no tokens");

  std::vector<SparseVector> X;
  std::vector<ContentCategory> y;
  for (std::size_t i = 0; i < n_train; ++i) {
    X.push_back(transform(clf.tfidf, train_tokens[i]));
    y.push_back(corpus[order[i]].categories.front());
  }

  std::vector<ContentCategory> classes;
  std::array<std::size_t, kNumContentCategories> class_counts{};
  for (auto c : y) ++class_counts[index_of(c)];
  for (auto c : all_content_categories()) {
    if (class_counts[index_of(c)] > 0) classes.push_back(c);
  }

  std::size_t synthetic = 0;
  if (options.use_smote) {
    const auto majority = *std::max_element(class_counts.begin(), class_counts.end());
    for (auto c : classes) {
      const auto have = class_counts[index_of(c)];
      if (have >= majority || have < 2) continue;
      std::vector<SparseVector> members;
      for (std::size_t i = 0; i < n_train; ++i) {
        if (y[i] == c) members.push_back(X[i]);
      }
      auto extra = smote(members, options.smote_k, majority - have,
                         options.seed * 1000003ULL + index_of(c) + 1);
      synthetic += extra.size();
      for (auto& v : extra) {
        X.push_back(std::move(v));
        y.push_back(c);
      }
    }
  }

  auto labeled = [&](std::size_t from, std::size_t to) {
    std::vector<LabeledVector> out;
    for (std::size_t i = from; i < to; ++i) {
      const auto& s = corpus[order[i]];
      out.push_back({transform(clf.tfidf, lex_code(s.text)), s.categories});
    }
    return out;
  };
  const auto validation = labeled(n_train, n_train + n_val);
  const auto test = labeled(n_train + n_val, n);

  std::vector<std::pair<double, double>> val_curve;
  double best_alpha = options.alpha_grid.empty() ? 1.0 : options.alpha_grid.front();
  if (!validation.empty() && options.alpha_grid.size() > 1) {
    best_alpha = grid_search_alpha(X, y, classes, V, validation, options.alpha_grid);
  }
  if (report && !validation.empty()) {
    for (double a : options.alpha_grid) {
      val_curve.emplace_back(a, threshold_accuracy(train_nb(X, y, classes, V, a), validation));
    }
  }
  clf.nb = train_nb(X, y, classes, V, best_alpha);

  if (report) {
    report->best_alpha = best_alpha;
    report->validation_accuracy = std::move(val_curve);
    report->test_accuracy = test.empty() ? 0.0 : threshold_accuracy(clf.nb, test);
    report->train_size = n_train;
    report->validation_size = validation.size();
    report->test_size = test.size();
    report->synthetic_count = synthetic;
  }
  return clf;
}

double evaluate_classifier(const CodeBlockClassifier& clf, std::span<const CodeBlockSample> corpus) {
  std::vector<LabeledVector> samples;
  samples.reserve(corpus.size());
  for (const auto& s : corpus) samples.push_back({transform(clf.tfidf, lex_code(s.text)), s.categories});
  return threshold_accuracy(clf.nb, samples);
}

// ---- serialization ---------------------------------------------------------

nlohmann::json to_json(const CodeBlockClassifier& clf) {
  std::vector<std::string> vocab(clf.tfidf.vocabulary.size());
  for (const auto& [tok, col] : clf.tfidf.vocabulary) vocab[col] = tok;
  nlohmann::json classes = nlohmann::json::array();
  for (auto c : clf.nb.classes) classes.push_back(to_code(c));
  return nlohmann::json{
      {"format", "intent-miner/codeblock"},
      {"format_version", 1},
      {"vocabulary", vocab},
      {"idf", clf.tfidf.idf},
      {"document_count", clf.tfidf.document_count},
      {"classes", classes},
      {"class_log_priors", clf.nb.class_log_priors},
      {"feature_log_likelihoods", clf.nb.feature_log_likelihoods},
      {"alpha", clf.nb.alpha},
  };
}

CodeBlockClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    CodeBlockClassifier clf;
    const auto vocab = j.at("vocabulary").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      clf.tfidf.vocabulary.emplace(vocab[i], static_cast<std::uint32_t>(i));
    }
    clf.tfidf.idf = j.at("idf").get<std::vector<double>>();
    clf.tfidf.document_count = j.at("document_count").get<std::size_t>();
    for (const auto& c : j.at("classes")) clf.nb.classes.push_back(parse_content_category(c.get<std::string>()));
    clf.nb.class_log_priors = j.at("class_log_priors").get<std::vector<double>>();
    clf.nb.feature_log_likelihoods = j.at("feature_log_likelihoods").get<std::vector<double>>();
    clf.nb.alpha = j.at("alpha").get<double>();
    clf.nb.vocabulary_size = clf.tfidf.idf.size();
    if (clf.tfidf.vocabulary.size() != clf.tfidf.idf.size() ||
        clf.nb.class_log_priors.size() != clf.nb.classes.size() ||
        clf.nb.feature_log_likelihoods.size() != clf.nb.classes.size() * clf.nb.vocabulary_size) {
      throw ValidationError("code-block model tensors have inconsistent sizes");
    }
    return clf;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed code-block model: ") + e.what());
  }
}

}  // namespace intent_miner::codeblock
