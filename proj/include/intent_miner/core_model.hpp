#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace intent_miner {

inline constexpr std::size_t kNumIntentions = 7;
inline constexpr std::size_t kNumContentCategories = 6;

// Index order is part of the model file format: score vectors and weight
// columns are laid out in this order.
enum class Intention : std::uint8_t {
  kDiscrepancy = 0,
  kExplicitError = 1,
  kReview = 2,
  kConceptual = 3,
  kLearning = 4,
  kHowTo = 5,
  kOther = 6,
};

enum class ContentCategory : std::uint8_t {
  kNaturalLanguage = 0,
  kCode = 1,
  kErrorMessage = 2,
  kConfig = 3,
  kCommandLine = 4,
  kOthers = 5,
};

enum class PostSource : std::uint8_t { kStackExchange, kLithium, kDiscourse, kOther };

std::string_view to_code(Intention intention);
std::string_view to_code(ContentCategory category);
std::string_view to_code(PostSource source);

// Throws ValidationError for strings outside the canonical vocabulary.
Intention parse_intention(std::string_view code);
ContentCategory parse_content_category(std::string_view code);
PostSource parse_source(std::string_view code);

constexpr std::size_t index_of(Intention i) { return static_cast<std::size_t>(i); }
constexpr std::size_t index_of(ContentCategory c) { return static_cast<std::size_t>(c); }

// Per-intention probabilities in index order.
using PredictionScores = std::array<double, kNumIntentions>;

// All intentions in index order.
const std::array<Intention, kNumIntentions>& all_intentions();
const std::array<ContentCategory, kNumContentCategories>& all_content_categories();

// A subset of the seven intentions, stored as a bitmask.
class IntentionLabelSet {
 public:
  constexpr IntentionLabelSet() = default;
  IntentionLabelSet(std::initializer_list<Intention> labels) {
    for (auto l : labels) insert(l);
  }

  static constexpr IntentionLabelSet from_mask(std::uint8_t mask) {
    IntentionLabelSet s;
    s.mask_ = mask & 0x7F;
    return s;
  }

  constexpr void insert(Intention i) { mask_ |= bit(i); }
  constexpr void erase(Intention i) { mask_ &= static_cast<std::uint8_t>(~bit(i)); }
  constexpr bool contains(Intention i) const { return (mask_ & bit(i)) != 0; }
  constexpr bool contains_index(std::size_t idx) const { return idx < kNumIntentions && ((mask_ >> idx) & 1U); }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr std::uint8_t mask() const { return mask_; }
  std::size_t size() const;

  // Members in index order.
  std::vector<Intention> members() const;
  std::vector<std::string> codes() const;

  // 0/1 indicator vector in index order.
  std::array<double, kNumIntentions> indicator() const;

  friend constexpr bool operator==(IntentionLabelSet a, IntentionLabelSet b) = default;
  friend constexpr IntentionLabelSet operator&(IntentionLabelSet a, IntentionLabelSet b) {
    return from_mask(a.mask_ & b.mask_);
  }

 private:
  static constexpr std::uint8_t bit(Intention i) {
    return static_cast<std::uint8_t>(1U << static_cast<unsigned>(i));
  }
  std::uint8_t mask_ = 0;
};

struct Post {
  std::string id;
  PostSource source = PostSource::kStackExchange;
  std::string title;
  std::string body_html;
  std::optional<std::string> url;
};

struct AnnotatedPost {
  Post post;
  IntentionLabelSet labels;
};

// JSONL dataset I/O. Records are returned in file order. Unknown label or
// source strings, empty label arrays, empty ids or titles, and duplicate ids
// are rejected with the offending line number.
std::vector<AnnotatedPost> load_dataset(const std::filesystem::path& path);
std::vector<AnnotatedPost> parse_dataset(std::string_view jsonl);
// Same record format with "labels" optional (ignored when present but it
// must still be valid).
std::vector<Post> load_posts(const std::filesystem::path& path);
std::vector<Post> parse_posts(std::string_view jsonl);

void save_dataset(const std::filesystem::path& path, const std::vector<AnnotatedPost>& data);
std::string serialize_dataset(const std::vector<AnnotatedPost>& data);

struct DatasetStats {
  std::size_t post_count = 0;
  std::array<std::size_t, kNumIntentions> label_counts{};
  // cardinality_counts[c] = number of posts with exactly c labels; index 0 unused.
  std::array<std::size_t, kNumIntentions + 1> cardinality_counts{};
  // Whitespace-token lengths of the cleaned description.
  double description_tokens_mean = 0.0;
  double description_tokens_median = 0.0;
  std::size_t description_tokens_max = 0;
};

DatasetStats dataset_stats(const std::vector<AnnotatedPost>& data);

// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Version string embedded in reports.
std::string_view version_string();

}  // namespace intent_miner
