#include "intent_miner/features.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

#include "intent_miner/errors.hpp"

namespace intent_miner::features {

namespace {

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool has_alnum(std::string_view tok) {
  return std::any_of(tok.begin(), tok.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; });
}

// Lowercases and strips leading/trailing characters that are neither
// alphanumeric nor an apostrophe.
std::string normalize_token(std::string_view tok) {
  auto keep = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '\''; };
  std::size_t b = 0;
  std::size_t e = tok.size();
  while (b < e && !keep(tok[b])) ++b;
  while (e > b && !keep(tok[e - 1])) --e;
  std::string out(tok.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_negation(std::string_view tok) {
  static constexpr std::array<std::string_view, 11> kNegations = {
      "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "nowhere", "cannot", "without"};
  if (std::find(kNegations.begin(), kNegations.end(), tok) != kNegations.end()) return true;
  return tok.size() > 3 && tok.substr(tok.size() - 3) == "n't";
}

constexpr double kCompoundAlpha = 15.0;

}  // namespace

std::size_t count_syllables(std::string_view word) {
  std::string letters;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      letters += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  std::size_t groups = 0;
  bool in_group = false;
  for (char c : letters) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const auto n = letters.size();
  if (n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]) && groups > 0) --groups;
  return std::max<std::size_t>(groups, 1);
}

TextCounts count_text(std::string_view text) {
  TextCounts counts;
  for (auto tok : preprocess::word_tokens(text)) {
    if (!has_alnum(tok)) continue;
    ++counts.words;
    for (char c : tok) {
      if (std::isalpha(static_cast<unsigned char>(c))) ++counts.letters;
    }
    const auto syl = count_syllables(tok);
    counts.syllables += syl;
    if (syl >= 3) ++counts.polysyllables;
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '?' || c == '!') && (i + 1 == text.size() || is_ascii_space(text[i + 1]))) {
      ++counts.sentences;
    }
  }
  counts.sentences = std::max<std::size_t>(counts.sentences, 1);
  return counts;
}

Readability readability(std::string_view text) {
  const auto c = count_text(text);
  if (c.words == 0) return {};
  const double words = static_cast<double>(c.words);
  const double sentences = static_cast<double>(c.sentences);
  Readability r;
  r.flesch_kincaid = 0.39 * (words / sentences) + 11.8 * (static_cast<double>(c.syllables) / words) - 15.59;
  r.ari = 4.71 * (static_cast<double>(c.letters) / words) + 0.5 * (words / sentences) - 21.43;
  r.smog = 1.0430 * std::sqrt(static_cast<double>(c.polysyllables) * 30.0 / sentences) + 3.1291;
  return r;
}

Lexicon::Lexicon(std::unordered_map<std::string, double> entries) : entries_(std::move(entries)) {}

Lexicon Lexicon::parse(std::string_view text) {
  std::unordered_map<std::string, double> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && is_ascii_space(line.back())) line.remove_suffix(1);
    while (!line.empty() && is_ascii_space(line.front())) line.remove_prefix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected word<TAB>valence", line_no);
    std::string word = normalize_token(line.substr(0, tab));
    const std::string value(line.substr(tab + 1));
    double valence;
    try {
      std::size_t used = 0;
      valence = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("bad valence '" + value + "'", line_no);
    }
    if (word.empty()) throw ParseError("empty word", line_no);
    if (!(valence >= -4.0 && valence <= 4.0)) throw ParseError("valence outside [-4, 4]", line_no);
    entries[std::move(word)] = valence;
  }
  return Lexicon(std::move(entries));
}

Lexicon Lexicon::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const Lexicon& Lexicon::bundled() {
  static const Lexicon lexicon = parse(bundled_lexicon_text());
  return lexicon;
}

std::optional<double> Lexicon::valence(std::string_view word) const {
  if (auto it = entries_.find(std::string(word)); it != entries_.end()) return it->second;
  return std::nullopt;
}

Sentiment sentiment(std::string_view text, const Lexicon& lexicon) {
  std::vector<std::string> tokens;
  for (auto raw : preprocess::word_tokens(text)) {
    auto tok = normalize_token(raw);
    if (!tok.empty()) tokens.push_back(std::move(tok));
  }
  double sum = 0.0;
  double pos_mass = 0.0;
  double neg_mass = 0.0;
  std::size_t neutral = 0;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto v = lexicon.valence(tokens[i]);
    if (!v) {
      ++neutral;
      continue;
    }
    ++matched;
    double val = *v;
    for (std::size_t back = 1; back <= 3 && back <= i; ++back) {
      if (is_negation(tokens[i - back])) {
        val = -val;
        break;
      }
    }
    sum += val;
    if (val > 0) {
      pos_mass += val;
    } else {
      neg_mass -= val;
    }
  }
  Sentiment s;
  const double total = pos_mass + neg_mass + static_cast<double>(neutral);
  if (matched == 0 || total <= 0.0) return s;
  s.pos = pos_mass / total;
  s.neg = neg_mass / total;
  s.neu = std::max(0.0, 1.0 - s.pos - s.neg);
  s.compound = sum / std::sqrt(sum * sum + kCompoundAlpha);
  return s;
}

TextualFeatures textual_features(std::string_view description, const Lexicon& lexicon) {
  TextualFeatures tf;
  tf.word_count = static_cast<double>(preprocess::word_tokens(description).size());
  tf.readability = readability(description);
  tf.sentiment = sentiment(description, lexicon);
  return tf;
}

RawFeatures concat_features(const codeblock::ContentCategoryDistribution& dist,
                            const TextualFeatures& tf) {
  RawFeatures out{};
  std::copy(dist.begin(), dist.end(), out.begin());
  auto* t = out.data() + kNumContentCategories;
  t[0] = tf.word_count;
  t[1] = tf.readability.flesch_kincaid;
  t[2] = tf.readability.ari;
  t[3] = tf.readability.smog;
  t[4] = tf.sentiment.pos;
  t[5] = tf.sentiment.neu;
  t[6] = tf.sentiment.neg;
  t[7] = tf.sentiment.compound;
  return out;
}

Standardizer::Standardizer() { stddev_.fill(0.0); }

Standardizer Standardizer::fit(std::span<const RawFeatures> rows) {
  Standardizer s;
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (std::size_t d = 0; d < kFeatureDim; ++d) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[d];
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) var += (r[d] - mean) * (r[d] - mean);
    const double sd = std::sqrt(var / n);
    s.mean_[d] = mean;
    s.stddev_[d] = sd > 1e-12 ? sd : 0.0;
  }
  return s;
}

RawFeatures Standardizer::apply(const RawFeatures& raw) const {
  RawFeatures out = raw;
  for (std::size_t d = 0; d < kFeatureDim; ++d) {
    if (stddev_[d] > 0.0) out[d] = (raw[d] - mean_[d]) / stddev_[d];
  }
  return out;
}

nlohmann::json Standardizer::to_json() const {
  return nlohmann::json{{"mean", mean_}, {"stddev", stddev_}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("stddev").get<std::vector<double>>();
  if (mean.size() != kFeatureDim || sd.size() != kFeatureDim) {
    throw ValidationError("standardizer must have " + std::to_string(kFeatureDim) + " dimensions");
  }
  std::copy(mean.begin(), mean.end(), s.mean_.begin());
  std::copy(sd.begin(), sd.end(), s.stddev_.begin());
  return s;
}

FeatureVector assemble_features(const codeblock::ContentCategoryDistribution& dist,
                                const TextualFeatures& tf, const Standardizer& standardizer) {
  return FeatureVector{standardizer.apply(concat_features(dist, tf))};
}

FeatureExtractor::FeatureExtractor(std::optional<codeblock::CodeBlockClassifier> code_classifier,
                                   Lexicon lexicon)
    : code_classifier_(std::move(code_classifier)), lexicon_(std::move(lexicon)) {}

codeblock::ContentCategoryDistribution FeatureExtractor::content(const preprocess::CleanPost& post) const {
  if (!code_classifier_ || post.code_blocks.empty()) {
    codeblock::ContentCategoryDistribution d{};
    d[index_of(ContentCategory::kNaturalLanguage)] = 1.0;
    return d;
  }
  return codeblock::predict_content(*code_classifier_, post.code_blocks);
}

RawFeatures FeatureExtractor::raw(const preprocess::CleanPost& post) const {
  return concat_features(content(post), textual_features(post.description_text, lexicon_));
}

}  // namespace intent_miner::features
