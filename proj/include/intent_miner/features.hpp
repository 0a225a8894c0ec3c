#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "intent_miner/codeblock.hpp"
#include "intent_miner/preprocess.hpp"

namespace intent_miner::features {

inline constexpr std::size_t kNumTextualFeatures = 8;
inline constexpr std::size_t kFeatureDim = kNumContentCategories + kNumTextualFeatures;  // 14

struct Readability {
  double flesch_kincaid = 0.0;
  double ari = 0.0;
  double smog = 0.0;
};

// Counts behind the readability formulas, exposed for testing.
struct TextCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t letters = 0;
  std::size_t syllables = 0;
  std::size_t polysyllables = 0;
};

// Vowel groups (aeiouy), minus a trailing silent 'e', at least 1.
std::size_t count_syllables(std::string_view word);
TextCounts count_text(std::string_view text);

// Flesch-Kincaid grade, Automated Readability Index and SMOG. Text with no
// words scores (0, 0, 0).
Readability readability(std::string_view text);

struct Sentiment {
  double pos = 0.0;
  double neu = 1.0;
  double neg = 0.0;
  double compound = 0.0;
};

// word -> valence in [-4, 4].
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::unordered_map<std::string, double> entries);

  // "word<TAB>valence" lines; '#' starts a comment. Throws ParseError.
  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::filesystem::path& path);
  // The lexicon compiled into the library.
  static const Lexicon& bundled();

  std::optional<double> valence(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<std::string, double>& entries() const { return entries_; }

 private:
  std::unordered_map<std::string, double> entries_;
};

std::string_view bundled_lexicon_text();

// Lexicon-and-rule scorer. Tokens are lowercased and stripped of surrounding
// punctuation. A negation word among the three preceding tokens flips a
// token's valence. compound = s / sqrt(s^2 + 15) where s is the signed sum.
// pos and neg are the shares of positive and negative valence mass against
// that mass plus one unit per unmatched token; neu is the remainder.
Sentiment sentiment(std::string_view text, const Lexicon& lexicon);

struct TextualFeatures {
  double word_count = 0.0;
  Readability readability;
  Sentiment sentiment;
};

TextualFeatures textual_features(std::string_view description, const Lexicon& lexicon);

// 6 content probabilities then word_count, FK, ARI, SMOG, pos, neu, neg,
// compound.
using RawFeatures = std::array<double, kFeatureDim>;

RawFeatures concat_features(const codeblock::ContentCategoryDistribution& dist,
                            const TextualFeatures& tf);

// Per-dimension z-scoring fit on a training split. Dimensions with zero
// spread pass through unscaled.
class Standardizer {
 public:
  Standardizer();  // identity
  static Standardizer fit(std::span<const RawFeatures> rows);

  RawFeatures apply(const RawFeatures& raw) const;

  const RawFeatures& mean() const { return mean_; }
  const RawFeatures& stddev() const { return stddev_; }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

 private:
  RawFeatures mean_{};
  RawFeatures stddev_{};
};

struct FeatureVector {
  RawFeatures values{};
};

FeatureVector assemble_features(const codeblock::ContentCategoryDistribution& dist,
                                const TextualFeatures& tf, const Standardizer& standardizer);

// Computes unstandardized features for a cleaned post. Without a code-block
// classifier every post gets the natural-language one-hot distribution.
class FeatureExtractor {
 public:
  FeatureExtractor(std::optional<codeblock::CodeBlockClassifier> code_classifier, Lexicon lexicon);

  RawFeatures raw(const preprocess::CleanPost& post) const;
  codeblock::ContentCategoryDistribution content(const preprocess::CleanPost& post) const;

  const std::optional<codeblock::CodeBlockClassifier>& code_classifier() const { return code_classifier_; }
  const Lexicon& lexicon() const { return lexicon_; }

 private:
  std::optional<codeblock::CodeBlockClassifier> code_classifier_;
  Lexicon lexicon_;
};

}  // namespace intent_miner::features
