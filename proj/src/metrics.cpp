#include "intent_miner/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "intent_miner/errors.hpp"
#include "intent_miner/head.hpp"

namespace intent_miner::metrics {

namespace {

void check_k(std::size_t k) {
  if (k < 1 || k > kNumIntentions) throw ValidationError("k must be in [1, 7]");
}

// Mann-Whitney statistic with midranks: P(score_pos > score_neg) + P(tie)/2.
double rank_auc(std::vector<std::pair<double, bool>> scored) {
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t r = i; r < j; ++r) {
      if (scored[r].second) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scored.size() - n_pos;
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

}  // namespace

IntentionLabelSet top_k(const PredictionScores& scores, std::size_t k) {
  check_k(k);
  std::array<std::size_t, kNumIntentions> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  IntentionLabelSet out;
  for (std::size_t r = 0; r < k; ++r) out.insert(static_cast<Intention>(order[r]));
  return out;
}

AtK at_k(const RankedPrediction& pred, std::size_t k) {
  const auto hits = (top_k(pred.scores, k) & pred.ground_truth).size();
  const auto gt = pred.ground_truth.size();
  const std::size_t recall_denominator = gt > k ? k : gt;
  AtK r;
  r.precision = static_cast<double>(hits) / static_cast<double>(k);
  r.recall = recall_denominator == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(recall_denominator);
  // 2PR/(P+R) with P = h/k, R = h/d reduces to 2h/(k+d).
  r.f1 = hits == 0 ? 0.0 : 2.0 * static_cast<double>(hits) / static_cast<double>(k + recall_denominator);
  return r;
}

AtK precision_recall_f1_at_k(std::span<const RankedPrediction> preds, std::size_t k) {
  check_k(k);
  if (preds.empty()) throw ValidationError("no predictions to evaluate");
  AtK sum;
  for (const auto& p : preds) {
    const auto r = at_k(p, k);
    sum.precision += r.precision;
    sum.recall += r.recall;
    sum.f1 += r.f1;
  }
  const double n = static_cast<double>(preds.size());
  return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

MicroPrf micro_prf(std::span<const std::pair<IntentionLabelSet, IntentionLabelSet>> refined) {
  MicroPrf out;
  auto& t = out.totals;
  for (const auto& [pred, truth] : refined) {
    const auto tp = (pred & truth).size();
    t.tp += tp;
    t.fp += pred.size() - tp;
    t.fn += truth.size() - tp;
  }
  t.tn = kNumIntentions * refined.size() - t.tp - t.fp - t.fn;
  auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  out.precision = ratio(t.tp, t.tp + t.fp);
  out.recall = ratio(t.tp, t.tp + t.fn);
  out.f1 = ratio(2 * t.tp, 2 * t.tp + t.fp + t.fn);
  return out;
}

OvoAuc ovo_auc(std::span<const RankedPrediction> preds) {
  OvoAuc out;
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumIntentions; ++i) {
    for (std::size_t j = i + 1; j < kNumIntentions; ++j) {
      std::vector<std::pair<double, bool>> by_i, by_j;
      std::size_t n_i = 0;
      std::size_t n_j = 0;
      for (const auto& p : preds) {
        const bool has_i = p.ground_truth.contains_index(i);
        const bool has_j = p.ground_truth.contains_index(j);
        if (has_i == has_j) continue;
        (has_i ? n_i : n_j)++;
        by_i.emplace_back(p.scores[i], has_i);
        by_j.emplace_back(p.scores[j], has_j);
      }
      if (n_i == 0 || n_j == 0) {
        out.skipped.emplace_back(i, j);
        continue;
      }
      const double auc = 0.5 * (rank_auc(std::move(by_i)) + rank_auc(std::move(by_j)));
      out.pairs.push_back({i, j, n_i, n_j, auc});
      sum += auc;
    }
  }
  if (out.pairs.empty()) throw ValidationError("no class pair has samples on both sides");
  out.mean = sum / static_cast<double>(out.pairs.size());
  return out;
}

double top_k_accuracy(std::span<const RankedPrediction> preds, std::size_t k) {
  check_k(k);
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : preds) {
    if (!(top_k(p.scores, k) & p.ground_truth).empty()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::optional<double> krippendorff_alpha(const BinaryRatings& ratings) {
  if (ratings.rater_a.size() != ratings.rater_b.size()) {
    throw ValidationError("raters coded different numbers of items");
  }
  if (ratings.rater_a.size() < 2) throw ValidationError("agreement needs at least two items");

  // Coincidence matrix: each item with two values contributes both ordered
  // pairs with weight 1 / (m_u - 1) = 1.
  double o[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t u = 0; u < ratings.rater_a.size(); ++u) {
    const int a = ratings.rater_a[u] ? 1 : 0;
    const int b = ratings.rater_b[u] ? 1 : 0;
    o[a][b] += 1.0;
    o[b][a] += 1.0;
  }
  const double n0 = o[0][0] + o[0][1];
  const double n1 = o[1][0] + o[1][1];
  const double n = n0 + n1;
  const double expected = 2.0 * n0 * n1;  // sum over c != k of n_c n_k
  if (expected == 0.0) return std::nullopt;
  const double observed = o[0][1] + o[1][0];
  return 1.0 - (n - 1.0) * observed / expected;
}

std::optional<double> krippendorff_alpha(const AgreementTable& table, Intention category) {
  return krippendorff_alpha(table.categories[index_of(category)]);
}

AgreementTable agreement_table(std::span<const AnnotatedPost> a, std::span<const AnnotatedPost> b) {
  std::unordered_map<std::string, IntentionLabelSet> by_id;
  for (const auto& rec : b) by_id.emplace(rec.post.id, rec.labels);
  AgreementTable table;
  for (const auto& rec : a) {
    auto it = by_id.find(rec.post.id);
    if (it == by_id.end()) continue;
    table.item_ids.push_back(rec.post.id);
    for (std::size_t c = 0; c < kNumIntentions; ++c) {
      table.categories[c].rater_a.push_back(rec.labels.contains_index(c) ? 1 : 0);
      table.categories[c].rater_b.push_back(it->second.contains_index(c) ? 1 : 0);
    }
  }
  return table;
}

nlohmann::ordered_json evaluation_report(std::span<const RankedPrediction> preds, double threshold) {
  if (preds.empty()) throw ValidationError("no predictions to evaluate");
  nlohmann::ordered_json at_k_json = nlohmann::ordered_json::object();
  nlohmann::ordered_json top_k_json = nlohmann::ordered_json::object();
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto r = precision_recall_f1_at_k(preds, k);
    at_k_json[std::to_string(k)] = {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
    top_k_json[std::to_string(k)] = top_k_accuracy(preds, k);
  }

  std::vector<std::pair<IntentionLabelSet, IntentionLabelSet>> refined;
  refined.reserve(preds.size());
  for (const auto& p : preds) refined.emplace_back(head::refine(p.scores, threshold), p.ground_truth);
  const auto micro = micro_prf(refined);

  nlohmann::ordered_json auc_json;
  try {
    const auto auc = ovo_auc(preds);
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : auc.pairs) {
      pairs.push_back({{"i", to_code(static_cast<Intention>(p.class_i))},
                       {"j", to_code(static_cast<Intention>(p.class_j))},
                       {"count_i", p.count_i},
                       {"count_j", p.count_j},
                       {"auc", p.auc}});
    }
    nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
    for (const auto& [i, j] : auc.skipped) {
      skipped.push_back({to_code(static_cast<Intention>(i)), to_code(static_cast<Intention>(j))});
    }
    auc_json = {{"mean", auc.mean}, {"pairs", pairs}, {"skipped_pairs", skipped}};
  } catch (const ValidationError& e) {
    auc_json = {{"mean", nullptr}, {"error", e.what()}};
  }

  nlohmann::ordered_json report;
  report["samples"] = preds.size();
  report["threshold"] = threshold;
  report["micro"] = {{"precision", micro.precision},
                     {"recall", micro.recall},
                     {"f1", micro.f1},
                     {"tp", micro.totals.tp},
                     {"fp", micro.totals.fp},
                     {"fn", micro.totals.fn},
                     {"tn", micro.totals.tn}};
  report["at_k"] = at_k_json;
  report["top_k_accuracy"] = top_k_json;
  report["ovo_auc"] = auc_json;
  return report;
}

}  // namespace intent_miner::metrics
