#pragma once

// Brute-force reference implementations, written without reusing any code
// from the library so that agreement means something.

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

namespace intent_miner::testing {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
  friend Rational operator/(Rational a, Rational b) { return {a.num * b.den, a.den * b.num}; }
  friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
};

using Scores7 = std::array<double, 7>;
using Truth7 = std::array<bool, 7>;

struct OracleSample {
  Scores7 scores{};
  Truth7 truth{};
};

// The unique k-subset S such that every member beats every non-member
// (higher score, or equal score and lower index), found by enumerating all
// 7-bit masks.
Truth7 oracle_top_k(const Scores7& scores, int k);

struct OracleAtK {
  Rational precision, recall, f1;
};

// Per-sample P/R/F1 with F1 = 2PR/(P+R) in exact arithmetic.
OracleAtK oracle_at_k(const OracleSample& s, int k);

// Means over samples, exact.
OracleAtK oracle_mean_at_k(const std::vector<OracleSample>& samples, int k);

Rational oracle_top_k_accuracy(const std::vector<OracleSample>& samples, int k);

struct OracleMicro {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  Rational precision, recall, f1;
};

// Refinement as a literal reading of the three rules, then per-class counts.
Truth7 oracle_refine(const Scores7& scores, double threshold);
OracleMicro oracle_micro(const std::vector<OracleSample>& samples, double threshold);

// Pair AUC by comparing every positive with every negative. Returns a
// negative value when the pair has no sample on one side.
double oracle_pair_auc(const std::vector<OracleSample>& samples, int i, int j);
// Mean over pairs with data; negative when none.
double oracle_ovo_auc(const std::vector<OracleSample>& samples);

// Krippendorff alpha for two raters and binary values, computed from the
// pairable-value definition: D_o over all within-item pairs, D_e over all
// pairs of pooled values.
double oracle_krippendorff_binary(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace intent_miner::testing
