#include "intent_miner/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "intent_miner/errors.hpp"
#include "intent_miner/preprocess.hpp"
#include "intent_miner/rng.hpp"

namespace intent_miner::cv {

namespace {

constexpr int kReportSchemaVersion = 1;

nlohmann::ordered_json index_array(const std::vector<std::size_t>& idx, const std::vector<std::string>& ids) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (auto i : idx) out.push_back(ids[i]);
  return out;
}

std::string_view mode_code(CodeBlockMode m) {
  switch (m) {
    case CodeBlockMode::kNone: return "none";
    case CodeBlockMode::kPretrained: return "pretrained";
    case CodeBlockMode::kRefitPerFold: return "refit_per_fold";
  }
  return "none";
}

// Corpus minus the blocks that came from posts in the test fold.
std::vector<codeblock::CodeBlockSample> corpus_without(std::span<const codeblock::CodeBlockSample> corpus,
                                                       const std::unordered_set<std::string>& excluded) {
  std::vector<codeblock::CodeBlockSample> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    if (s.post_id && excluded.contains(*s.post_id)) continue;
    out.push_back(s);
  }
  return out;
}

struct Shared {
  std::span<const AnnotatedPost> data;
  const CvOptions* options = nullptr;
  embedding::ProviderSpec provider;
  std::vector<preprocess::CleanPost> cleaned;
  std::vector<embedding::Embedding> title_emb;
  std::vector<embedding::Embedding> desc_emb;
};

Shared prepare(std::span<const AnnotatedPost> data, const CvOptions& options,
               embedding::EmbeddingProvider& provider) {
  options.head.validate();
  if (provider.spec().dimension != options.head.embedding_dim) {
    throw ShapeError("input layer: provider dimension " + std::to_string(provider.spec().dimension) +
                     " does not match embedding_dim " + std::to_string(options.head.embedding_dim));
  }
  Shared shared;
  shared.data = data;
  shared.options = &options;
  shared.provider = provider.spec();
  shared.cleaned.reserve(data.size());
  std::vector<std::string> titles, descs;
  for (const auto& rec : data) {
    shared.cleaned.push_back(preprocess::clean(rec.post));
    titles.push_back(shared.cleaned.back().title_text);
    descs.push_back(shared.cleaned.back().description_text);
  }
  shared.title_emb = embedding::embed_batch(provider, titles);
  shared.desc_emb = embedding::embed_batch(provider, descs);
  return shared;
}

FoldResult run_split(const Shared& s, const FoldSplit& split, std::size_t fold) {
  const auto& options = *s.options;

  std::optional<codeblock::CodeBlockClassifier> clf;
  switch (options.codeblock_mode) {
    case CodeBlockMode::kNone:
      break;
    case CodeBlockMode::kPretrained:
      if (!options.pretrained) throw ValidationError("pretrained code-block mode without a classifier");
      clf = options.pretrained;
      break;
    case CodeBlockMode::kRefitPerFold: {
      std::unordered_set<std::string> test_ids;
      for (auto i : split.test) test_ids.insert(s.data[i].post.id);
      const auto corpus = corpus_without(options.corpus, test_ids);
      clf = codeblock::train_classifier(corpus, options.codeblock_training, nullptr);
      break;
    }
  }

  const features::FeatureExtractor extractor(clf, options.lexicon);
  auto encode_at = [&](std::size_t i) {
    head::EncodedPost e;
    e.title = s.title_emb[i];
    e.desc = s.desc_emb[i];
    e.raw_features = extractor.raw(s.cleaned[i]);
    return e;
  };
  auto gather = [&](const std::vector<std::size_t>& idx, std::vector<head::EncodedPost>& posts,
                    std::vector<IntentionLabelSet>& labels) {
    posts.reserve(idx.size());
    labels.reserve(idx.size());
    for (auto i : idx) {
      posts.push_back(encode_at(i));
      labels.push_back(s.data[i].labels);
    }
  };

  std::vector<head::EncodedPost> train_posts, val_posts, test_posts;
  std::vector<IntentionLabelSet> train_labels, val_labels, test_labels;
  gather(split.train, train_posts, train_labels);
  gather(split.validation, val_posts, val_labels);
  gather(split.test, test_posts, test_labels);

  head::HeadConfig config = options.head;
  config.seed = options.head.seed + fold;

  FoldResult result;
  result.fold = fold;
  result.model = head::train(config, train_posts, train_labels, val_posts, val_labels, s.provider,
                             std::move(clf), options.lexicon, &result.log);

  result.predictions.reserve(split.test.size());
  for (std::size_t t = 0; t < split.test.size(); ++t) {
    const auto pred = head::predict(result.model, test_posts[t]);
    PooledPrediction p;
    p.id = s.data[split.test[t]].post.id;
    p.fold = fold;
    p.ranked.scores = pred.scores;
    p.ranked.ground_truth = test_labels[t];
    p.refined = pred.labels;
    result.predictions.push_back(std::move(p));
  }
  return result;
}

nlohmann::ordered_json fold_summary(const FoldResult& r, const FoldSplit& split) {
  nlohmann::ordered_json first = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < r.log.epochs.size() && e < 3; ++e) first.push_back(r.log.epochs[e].train_loss);
  return {{"fold", r.fold},
          {"train_size", split.train.size()},
          {"validation_size", split.validation.size()},
          {"test_size", split.test.size()},
          {"epochs_run", r.log.epochs.size()},
          {"best_epoch", r.log.best_epoch},
          {"best_validation_loss", r.log.best_validation_loss},
          {"stopped_early", r.log.stopped_early},
          {"first_train_losses", first}};
}

nlohmann::ordered_json config_echo(const FoldPlan& plan, const CvOptions& options) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["folds"] = plan.folds.size();
  j["validation_fraction"] = plan.validation_fraction;
  j["only_fold"] = options.only_fold ? nlohmann::ordered_json(*options.only_fold) : nlohmann::ordered_json();
  j["head"] = nlohmann::ordered_json::parse(options.head.to_json().dump());
  j["provider"] = nlohmann::ordered_json::parse(options.provider.to_json().dump());
  j["codeblock_mode"] = mode_code(options.codeblock_mode);
  return j;
}

}  // namespace

std::vector<std::size_t> FoldPlan::fold_of() const {
  std::vector<std::size_t> out(ids.size(), 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (auto i : folds[f].test) out[i] = f;
  }
  return out;
}

nlohmann::ordered_json FoldPlan::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["validation_fraction"] = validation_fraction;
  j["folds"] = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    j["folds"].push_back({{"fold", f},
                          {"test", index_array(folds[f].test, ids)},
                          {"train", index_array(folds[f].train, ids)},
                          {"validation", index_array(folds[f].validation, ids)}});
  }
  return j;
}

FoldPlan make_folds(std::span<const AnnotatedPost> data, std::uint64_t seed, std::size_t num_folds,
                    double validation_fraction) {
  if (num_folds < 2) throw ValidationError("need at least two folds");
  if (data.size() < num_folds) {
    throw ValidationError("dataset has " + std::to_string(data.size()) + " posts, fewer than the " +
                          std::to_string(num_folds) + " folds requested");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("validation fraction must be in (0, 1)");
  }

  FoldPlan plan;
  plan.seed = seed;
  plan.validation_fraction = validation_fraction;
  plan.ids.reserve(data.size());
  for (const auto& rec : data) plan.ids.push_back(rec.post.id);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  rng::Engine eng(seed);
  rng::shuffle(std::span<std::size_t>(order), eng);

  const std::size_t n = data.size();
  std::vector<std::size_t> bounds{0};
  for (std::size_t f = 0; f < num_folds; ++f) {
    bounds.push_back(bounds.back() + n / num_folds + (f < n % num_folds ? 1 : 0));
  }

  plan.folds.resize(num_folds);
  for (std::size_t f = 0; f < num_folds; ++f) {
    auto& split = plan.folds[f];
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(bounds[f]),
                      order.begin() + static_cast<std::ptrdiff_t>(bounds[f + 1]));
    std::vector<std::size_t> rest;
    rest.reserve(n - split.test.size());
    for (std::size_t g = 0; g < num_folds; ++g) {
      if (g == f) continue;
      rest.insert(rest.end(), order.begin() + static_cast<std::ptrdiff_t>(bounds[g]),
                  order.begin() + static_cast<std::ptrdiff_t>(bounds[g + 1]));
    }
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(rest.size()) * validation_fraction));
    if (n_val == 0 || n_val == rest.size()) {
      throw ValidationError("fold " + std::to_string(f) + " leaves an empty training or validation set");
    }
    split.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
  }
  return plan;
}

CvResult run_cv(std::span<const AnnotatedPost> data, const FoldPlan& plan, const CvOptions& options) {
  auto provider = embedding::make_provider(options.provider, options.sidecar_address);
  return run_cv(data, plan, options, *provider);
}

CvResult run_cv(std::span<const AnnotatedPost> data, const FoldPlan& plan, const CvOptions& options,
                embedding::EmbeddingProvider& provider) {
  if (plan.ids.size() != data.size()) throw ValidationError("fold plan does not match the dataset size");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (plan.ids[i] != data[i].post.id) throw ValidationError("fold plan does not match dataset id " + data[i].post.id);
  }
  if (options.only_fold && *options.only_fold >= plan.folds.size()) {
    throw ValidationError("fold " + std::to_string(*options.only_fold) + " does not exist");
  }

  const Shared shared = prepare(data, options, provider);

  std::vector<std::size_t> to_run;
  if (options.only_fold) {
    to_run.push_back(*options.only_fold);
  } else {
    to_run.resize(plan.folds.size());
    std::iota(to_run.begin(), to_run.end(), 0);
  }

  std::vector<std::optional<FoldResult>> results(to_run.size());
  std::vector<std::exception_ptr> errors(to_run.size());
  auto work = [&](std::size_t slot) {
    try {
      results[slot] = run_split(shared, plan.folds[to_run[slot]], to_run[slot]);
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, to_run.size());
  if (jobs == 1) {
    for (std::size_t slot = 0; slot < to_run.size(); ++slot) work(slot);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t slot = next++; slot < to_run.size(); slot = next++) work(slot);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t slot = 0; slot < to_run.size(); ++slot) {
    if (!errors[slot]) continue;
    const std::string where = "fold " + std::to_string(to_run[slot]) + ": ";
    try {
      std::rethrow_exception(errors[slot]);
    } catch (const ShapeError& e) {
      throw ShapeError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    } catch (const TrainingError& e) {
      throw TrainingError(where + e.what());
    } catch (const TransportError& e) {
      throw TransportError(where + e.what());
    } catch (const ProtocolError& e) {
      throw ProtocolError(where + e.what());
    } catch (const IoError& e) {
      throw IoError(where + e.what());
    }
  }

  CvResult out;
  for (auto& r : results) {
    out.pooled.insert(out.pooled.end(), r->predictions.begin(), r->predictions.end());
    out.folds.push_back(std::move(*r));
  }

  std::vector<metrics::RankedPrediction> ranked;
  ranked.reserve(out.pooled.size());
  for (const auto& p : out.pooled) ranked.push_back(p.ranked);

  nlohmann::ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["version"] = version_string();
  report["config"] = config_echo(plan, options);
  report["folds"] = nlohmann::ordered_json::array();
  for (const auto& r : out.folds) report["folds"].push_back(fold_summary(r, plan.folds[r.fold]));
  report["metrics"] = metrics::evaluation_report(ranked, options.head.threshold);
  out.report = std::move(report);
  return out;
}

FoldSplit holdout_split(std::size_t n, std::uint64_t seed, double validation_fraction) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("validation fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Engine eng(seed);
  rng::shuffle(std::span<std::size_t>(order), eng);
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * validation_fraction));
  if (n_val == 0 || n_val == n) throw ValidationError("dataset too small for a training/validation split");
  FoldSplit split;
  split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return split;
}

TrainResult train_model(std::span<const AnnotatedPost> data, const FoldSplit& split, const CvOptions& options,
                        embedding::EmbeddingProvider& provider) {
  const Shared shared = prepare(data, options, provider);
  auto fold = run_split(shared, split, 0);
  return {std::move(fold.model), std::move(fold.log)};
}

std::string predictions_jsonl(std::span<const PooledPrediction> preds) {
  std::ostringstream os;
  for (const auto& p : preds) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["scores"] = p.ranked.scores;
    j["labels"] = p.ranked.ground_truth.codes();
    j["predicted"] = p.refined.codes();
    os << j.dump() << '\n';
  }
  return os.str();
}

void write_run_directory(const std::filesystem::path& dir, const FoldPlan& plan, const CvResult& result) {
  write_file(dir / "plan.json", plan.to_json().dump(2) + "\n");
  for (const auto& r : result.folds) {
    const auto fold_dir = dir / ("fold-" + std::to_string(r.fold));
    head::save_model(fold_dir / "model.json", r.model);
    write_file(fold_dir / "predictions.jsonl", predictions_jsonl(r.predictions));
  }
  write_file(dir / "report.json", result.report.dump(2) + "\n");
}

}  // namespace intent_miner::cv
