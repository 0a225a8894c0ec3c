#pragma once

// Five-fold cross-validation: split, train one head per fold, pool the test
// predictions and evaluate once over the pool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "intent_miner/codeblock.hpp"
#include "intent_miner/core_model.hpp"
#include "intent_miner/embedding.hpp"
#include "intent_miner/features.hpp"
#include "intent_miner/head.hpp"
#include "intent_miner/metrics.hpp"

namespace intent_miner::cv {

// Indices into the dataset. `train` excludes `validation`.
struct FoldSplit {
  std::vector<std::size_t> test;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct FoldPlan {
  std::uint64_t seed = 0;
  double validation_fraction = 0.125;
  std::vector<std::string> ids;  // dataset ids, dataset order
  std::vector<FoldSplit> folds;

  // Fold index of each dataset record.
  std::vector<std::size_t> fold_of() const;
  nlohmann::ordered_json to_json() const;
};

inline constexpr std::size_t kDefaultFolds = 5;
inline constexpr double kDefaultValidationFraction = 1.0 / 8.0;

// Seeded shuffle, then contiguous slices whose sizes differ by at most one
// (the first n % k folds get the extra record). For each fold the training
// portion is the other slices in shuffled order and the validation set is
// its first floor(size * validation_fraction) records.
FoldPlan make_folds(std::span<const AnnotatedPost> data, std::uint64_t seed,
                    std::size_t num_folds = kDefaultFolds,
                    double validation_fraction = kDefaultValidationFraction);

enum class CodeBlockMode {
  kNone,             // no classifier: every post gets the natural-language one-hot
  kPretrained,       // one classifier shared by all folds
  kRefitPerFold,     // retrain on the corpus for each fold, dropping blocks of test posts
};

struct CvOptions {
  head::HeadConfig head;
  embedding::ProviderSpec provider;
  std::string sidecar_address;
  CodeBlockMode codeblock_mode = CodeBlockMode::kNone;
  std::optional<codeblock::CodeBlockClassifier> pretrained;
  std::vector<codeblock::CodeBlockSample> corpus;  // for kRefitPerFold
  codeblock::TrainingOptions codeblock_training;
  features::Lexicon lexicon = features::Lexicon::bundled();
  std::size_t jobs = 1;
  // Debug mode: run a single fold, i.e. one train/test split.
  std::optional<std::size_t> only_fold;
};

struct PooledPrediction {
  std::string id;
  std::size_t fold = 0;
  metrics::RankedPrediction ranked;
  IntentionLabelSet refined;
};

struct FoldResult {
  std::size_t fold = 0;
  head::IntentModel model;
  head::TrainingLog log;
  std::vector<PooledPrediction> predictions;
};

struct CvResult {
  std::vector<FoldResult> folds;
  std::vector<PooledPrediction> pooled;  // fold order, then test order within a fold
  nlohmann::ordered_json report;
};

// Embeddings are computed once with a provider built from options.provider;
// any failure inside a fold is rethrown with the fold index.
CvResult run_cv(std::span<const AnnotatedPost> data, const FoldPlan& plan, const CvOptions& options);

// Same, with a caller-supplied provider (must be safe for the chosen jobs).
CvResult run_cv(std::span<const AnnotatedPost> data, const FoldPlan& plan, const CvOptions& options,
                embedding::EmbeddingProvider& provider);

// Seeded shuffle of 0..n-1; the first floor(n * validation_fraction) indices
// are the validation set, the rest training. `test` stays empty.
FoldSplit holdout_split(std::size_t n, std::uint64_t seed, double validation_fraction = kDefaultValidationFraction);

struct TrainResult {
  head::IntentModel model;
  head::TrainingLog log;
};

// One model on a train/validation split, with the same code-block handling
// as a fold (refit mode trains on the whole corpus).
TrainResult train_model(std::span<const AnnotatedPost> data, const FoldSplit& split, const CvOptions& options,
                        embedding::EmbeddingProvider& provider);

// plan.json, fold-N/model.json, fold-N/predictions.jsonl, report.json.
void write_run_directory(const std::filesystem::path& dir, const FoldPlan& plan, const CvResult& result);

// {"id", "scores", "labels" (ground truth), "predicted"} per line.
std::string predictions_jsonl(std::span<const PooledPrediction> preds);

}  // namespace intent_miner::cv
