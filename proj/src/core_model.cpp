#include "intent_miner/core_model.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "intent_miner/errors.hpp"
#include "intent_miner/preprocess.hpp"

#ifndef INTENT_MINER_VERSION
#define INTENT_MINER_VERSION "0.0.0-unknown"
#endif

namespace intent_miner {

namespace {

constexpr std::array<std::string_view, kNumIntentions> kIntentionCodes = {
    "discrepancy", "explicit-error", "review", "conceptual", "learning", "how-to", "other"};

constexpr std::array<std::string_view, kNumContentCategories> kContentCodes = {
    "natural-language", "code", "error-message", "config", "command-line", "others"};

constexpr std::array<std::string_view, 4> kSourceCodes = {"stackexchange", "lithium", "discourse",
                                                          "other"};

template <typename Enum, std::size_t N>
Enum parse_code(const std::array<std::string_view, N>& codes, std::string_view code,
                const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (codes[i] == code) return static_cast<Enum>(i);
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(code) + "'");
}

AnnotatedPost record_from_json(const nlohmann::json& j, bool require_labels) {
  auto require_string = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing key '") + key + "'");
    if (!it->is_string()) throw ValidationError(std::string("key '") + key + "' must be a string");
    return it->get<std::string>();
  };

  AnnotatedPost rec;
  rec.post.id = require_string("id");
  if (rec.post.id.empty()) throw ValidationError("empty id");
  rec.post.source = parse_source(require_string("source"));
  rec.post.title = require_string("title");
  if (rec.post.title.empty()) throw ValidationError("empty title");
  rec.post.body_html = require_string("body_html");
  if (auto it = j.find("url"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("key 'url' must be a string");
    rec.post.url = it->get<std::string>();
  }

  auto labels = j.find("labels");
  if (!require_labels && (labels == j.end() || labels->is_null())) return rec;
  if (labels == j.end() || !labels->is_array()) throw ValidationError("'labels' must be an array");
  for (const auto& l : *labels) {
    if (!l.is_string()) throw ValidationError("label entries must be strings");
    rec.labels.insert(parse_intention(l.get<std::string>()));
  }
  if (require_labels && rec.labels.empty()) throw ValidationError("record '" + rec.post.id + "' has no labels");
  return rec;
}

}  // namespace

std::string_view to_code(Intention intention) { return kIntentionCodes[index_of(intention)]; }
std::string_view to_code(ContentCategory category) { return kContentCodes[index_of(category)]; }
std::string_view to_code(PostSource source) { return kSourceCodes[static_cast<std::size_t>(source)]; }

Intention parse_intention(std::string_view code) {
  return parse_code<Intention>(kIntentionCodes, code, "intention label");
}
ContentCategory parse_content_category(std::string_view code) {
  return parse_code<ContentCategory>(kContentCodes, code, "content category");
}
PostSource parse_source(std::string_view code) {
  return parse_code<PostSource>(kSourceCodes, code, "post source");
}

const std::array<Intention, kNumIntentions>& all_intentions() {
  static const std::array<Intention, kNumIntentions> all = {
      Intention::kDiscrepancy, Intention::kExplicitError, Intention::kReview, Intention::kConceptual,
      Intention::kLearning,    Intention::kHowTo,         Intention::kOther};
  return all;
}

const std::array<ContentCategory, kNumContentCategories>& all_content_categories() {
  static const std::array<ContentCategory, kNumContentCategories> all = {
      ContentCategory::kNaturalLanguage, ContentCategory::kCode,        ContentCategory::kErrorMessage,
      ContentCategory::kConfig,          ContentCategory::kCommandLine, ContentCategory::kOthers};
  return all;
}

std::size_t IntentionLabelSet::size() const { return static_cast<std::size_t>(std::popcount(mask_)); }

std::vector<Intention> IntentionLabelSet::members() const {
  std::vector<Intention> out;
  for (auto i : all_intentions()) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::string> IntentionLabelSet::codes() const {
  std::vector<std::string> out;
  for (auto i : members()) out.emplace_back(to_code(i));
  return out;
}

std::array<double, kNumIntentions> IntentionLabelSet::indicator() const {
  std::array<double, kNumIntentions> y{};
  for (std::size_t c = 0; c < kNumIntentions; ++c) y[c] = contains_index(c) ? 1.0 : 0.0;
  return y;
}

namespace {

std::vector<AnnotatedPost> parse_records(std::string_view jsonl, bool require_labels) {
  std::vector<AnnotatedPost> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("record is not a JSON object", line_no);
    try {
      auto rec = record_from_json(j, require_labels);
      if (!seen.insert(rec.post.id).second) {
        throw ValidationError("duplicate id '" + rec.post.id + "'");
      }
      out.push_back(std::move(rec));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

}  // namespace

std::vector<AnnotatedPost> parse_dataset(std::string_view jsonl) { return parse_records(jsonl, true); }

std::vector<AnnotatedPost> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

std::vector<Post> parse_posts(std::string_view jsonl) {
  std::vector<Post> out;
  for (auto& rec : parse_records(jsonl, false)) out.push_back(std::move(rec.post));
  return out;
}

std::vector<Post> load_posts(const std::filesystem::path& path) { return parse_posts(read_file(path)); }

std::string serialize_dataset(const std::vector<AnnotatedPost>& data) {
  std::string out;
  for (const auto& rec : data) {
    nlohmann::ordered_json j;
    j["id"] = rec.post.id;
    j["source"] = to_code(rec.post.source);
    j["title"] = rec.post.title;
    j["body_html"] = rec.post.body_html;
    j["labels"] = rec.labels.codes();
    if (rec.post.url) j["url"] = *rec.post.url;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<AnnotatedPost>& data) {
  write_file(path, serialize_dataset(data));
}

DatasetStats dataset_stats(const std::vector<AnnotatedPost>& data) {
  DatasetStats stats;
  stats.post_count = data.size();
  std::vector<std::size_t> lengths;
  lengths.reserve(data.size());
  for (const auto& rec : data) {
    for (std::size_t c = 0; c < kNumIntentions; ++c) {
      if (rec.labels.contains_index(c)) ++stats.label_counts[c];
    }
    ++stats.cardinality_counts[rec.labels.size()];
    auto cleaned = preprocess::clean(rec.post);
    lengths.push_back(preprocess::word_tokens(cleaned.description_text).size());
  }
  if (!lengths.empty()) {
    double sum = 0.0;
    for (auto l : lengths) sum += static_cast<double>(l);
    stats.description_tokens_mean = sum / static_cast<double>(lengths.size());
    std::sort(lengths.begin(), lengths.end());
    const auto n = lengths.size();
    stats.description_tokens_median =
        n % 2 == 1 ? static_cast<double>(lengths[n / 2])
                   : 0.5 * static_cast<double>(lengths[n / 2 - 1] + lengths[n / 2]);
    stats.description_tokens_max = lengths.back();
  }
  return stats;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

std::string_view version_string() { return INTENT_MINER_VERSION; }

}  // namespace intent_miner
