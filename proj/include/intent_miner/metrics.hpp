#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "intent_miner/core_model.hpp"

namespace intent_miner::metrics {

struct RankedPrediction {
  PredictionScores scores{};
  IntentionLabelSet ground_truth;
};

// The k highest-scoring intentions; equal scores rank the lower index first.
IntentionLabelSet top_k(const PredictionScores& scores, std::size_t k);

struct AtK {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-sample values for one prediction. Recall divides by k when the ground
// truth has more than k labels, otherwise by the ground-truth size. F1 is 0
// when precision and recall are both 0.
AtK at_k(const RankedPrediction& pred, std::size_t k);

// Sample means of the per-sample values. Throws ValidationError on an empty
// list or k outside [1, 7].
AtK precision_recall_f1_at_k(std::span<const RankedPrediction> preds, std::size_t k);

struct ConfusionTotals {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
};

struct MicroPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionTotals totals;
};

// (predicted, ground truth) pairs; counts pooled over all seven classes.
// Zero denominators give 0.
MicroPrf micro_prf(std::span<const std::pair<IntentionLabelSet, IntentionLabelSet>> refined);

struct PairAuc {
  std::size_t class_i = 0;
  std::size_t class_j = 0;
  std::size_t count_i = 0;  // samples with i but not j in the ground truth
  std::size_t count_j = 0;
  double auc = 0.0;
};

struct OvoAuc {
  double mean = 0.0;
  std::vector<PairAuc> pairs;                               // pairs with data
  std::vector<std::pair<std::size_t, std::size_t>> skipped;  // pairs without
};

// One-vs-one AUC. A pair (i, j) uses only samples whose ground truth holds
// exactly one of i and j; A(i|j) is the chance an i-sample outscores a
// j-sample on score_i (ties count 1/2); the pair AUC averages A(i|j) and
// A(j|i). Throws ValidationError when no pair has data.
OvoAuc ovo_auc(std::span<const RankedPrediction> preds);

// Fraction of samples whose top-k intersects the ground truth.
double top_k_accuracy(std::span<const RankedPrediction> preds, std::size_t k);

// Two raters' binary codes for one category over the same items.
struct BinaryRatings {
  std::vector<std::uint8_t> rater_a;
  std::vector<std::uint8_t> rater_b;
};

struct AgreementTable {
  std::array<BinaryRatings, kNumIntentions> categories;
  std::vector<std::string> item_ids;
};

// Nominal Krippendorff alpha from the coincidence matrix of paired values.
// Returns nullopt when expected disagreement is zero (one value only).
// Throws ValidationError for fewer than two items or unequal rater lengths.
std::optional<double> krippendorff_alpha(const BinaryRatings& ratings);
std::optional<double> krippendorff_alpha(const AgreementTable& table, Intention category);

// Pairs up two annotation sets by post id (ids present in both, in the order
// of `a`); each category becomes one binary observation per item.
AgreementTable agreement_table(std::span<const AnnotatedPost> a, std::span<const AnnotatedPost> b);

// Every metric over a pooled prediction list, as a JSON object.
nlohmann::ordered_json evaluation_report(std::span<const RankedPrediction> preds, double threshold);

}  // namespace intent_miner::metrics
