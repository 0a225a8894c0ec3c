#include "intent_miner/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>

namespace intent_miner::preprocess {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (lower(s[pos + k]) != prefix[k]) return false;
  }
  return true;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

struct NamedEntity {
  std::string_view name;
  std::uint32_t code_point;
};

// &nbsp; decodes to a plain space so it separates words like the browser
// rendering does.
constexpr std::array<NamedEntity, 20> kNamedEntities = {{
    {"lt", '<'},        {"gt", '>'},        {"amp", '&'},       {"quot", '"'},
    {"apos", '\''},     {"nbsp", ' '},      {"ndash", 0x2013},  {"mdash", 0x2014},
    {"hellip", 0x2026}, {"lsquo", 0x2018},  {"rsquo", 0x2019},  {"ldquo", 0x201C},
    {"rdquo", 0x201D},  {"copy", 0xA9},     {"reg", 0xAE},      {"trade", 0x2122},
    {"times", 0xD7},    {"laquo", 0xAB},    {"raquo", 0xBB},    {"bull", 0x2022},
}};

std::optional<std::uint32_t> parse_numeric_reference(std::string_view digits, bool hex) {
  if (digits.empty() || digits.size() > 8) return std::nullopt;
  std::uint32_t value = 0;
  for (char c : digits) {
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (hex && c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else if (hex && c >= 'A' && c <= 'F') {
      d = c - 'A' + 10;
    } else {
      return std::nullopt;
    }
    value = value * (hex ? 16U : 10U) + static_cast<std::uint32_t>(d);
  }
  if (value == 0 || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return std::nullopt;
  return value;
}

// Tags whose boundaries separate words when rendered.
bool is_block_tag(std::string_view name) {
  static constexpr std::array<std::string_view, 27> kBlock = {
      "p",     "div",     "br",     "li",    "ul",     "ol",    "h1",      "h2",    "h3",
      "h4",    "h5",      "h6",     "blockquote", "tr", "td",  "th",      "table", "hr",
      "pre",   "section", "article", "header", "footer", "dl", "dt",      "dd",    "img"};
  return std::find(kBlock.begin(), kBlock.end(), name) != kBlock.end();
}

struct Tag {
  std::string name;  // lowercase
  bool closing = false;
  std::size_t end = 0;  // index one past '>'
};

// Recognizes a tag starting at body[pos] == '<'. Returns nullopt when the '<'
// is a literal character (e.g. "a < b") or the tag is never closed.
std::optional<Tag> scan_tag(std::string_view body, std::size_t pos) {
  if (pos + 1 >= body.size()) return std::nullopt;
  std::size_t i = pos + 1;
  Tag tag;
  if (body[i] == '/') {
    tag.closing = true;
    ++i;
  }
  if (i >= body.size()) return std::nullopt;
  const char first = body[i];
  const bool declaration = !tag.closing && (first == '!' || first == '?');
  if (!declaration && !std::isalpha(static_cast<unsigned char>(first))) return std::nullopt;
  if (!declaration) {
    while (i < body.size() && (std::isalnum(static_cast<unsigned char>(body[i])) || body[i] == '-')) {
      tag.name += lower(body[i]);
      ++i;
    }
  }
  const auto close = body.find('>', i);
  if (close == std::string_view::npos) return std::nullopt;
  tag.end = close + 1;
  return tag;
}

// Length of a fence info string ("```python") directly after an opening
// fence, or 0 when the first line is content.
std::size_t fence_info_length(std::string_view body, std::size_t pos) {
  std::size_t i = pos;
  while (i < body.size() && body[i] != '\n') {
    const char c = body[i];
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '+' || c == '#' ||
          c == '.' || c == '-')) {
      return 0;
    }
    ++i;
  }
  return i < body.size() ? i - pos : 0;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

class BodyScanner {
 public:
  explicit BodyScanner(std::string_view body) : body_(body) {}

  void run() {
    std::size_t i = 0;
    while (i < body_.size()) {
      if (body_.compare(i, 4, "<!--") == 0) {
        const auto end = body_.find("-->", i + 4);
        i = end == std::string_view::npos ? body_.size() : end + 3;
        continue;
      }
      if (body_[i] == '<') {
        if (auto tag = scan_tag(body_, i)) {
          i = handle_tag(*tag);
          continue;
        }
      }
      if (body_.compare(i, 3, "```") == 0) {
        if (mode_ == Mode::kFence) {
          finish_block();
          i += 3;
          continue;
        }
        if (mode_ == Mode::kText && body_.find("```", i + 3) != std::string_view::npos) {
          mode_ = Mode::kFence;
          i += 3;
          i += fence_info_length(body_, i);
          continue;
        }
      }
      emit(body_[i]);
      ++i;
    }
    if (mode_ != Mode::kText) finish_block();
  }

  std::string description() const { return collapse_whitespace(decode_entities(text_)); }
  std::vector<std::string> blocks() { return std::move(blocks_); }

 private:
  enum class Mode { kText, kPre, kFence };

  std::size_t handle_tag(const Tag& tag) {
    if (mode_ == Mode::kText) {
      if (tag.name == "pre" && !tag.closing) {
        mode_ = Mode::kPre;
        text_ += ' ';
      } else if ((tag.name == "script" || tag.name == "style") && !tag.closing) {
        const std::string closer = "</" + tag.name;
        std::size_t j = tag.end;
        while (j < body_.size() && !starts_with_ci(body_, j, closer)) ++j;
        if (j < body_.size()) {
          const auto gt = body_.find('>', j);
          return gt == std::string_view::npos ? body_.size() : gt + 1;
        }
        return body_.size();
      } else if (is_block_tag(tag.name)) {
        text_ += ' ';
      }
    } else if (mode_ == Mode::kPre && tag.name == "pre" && tag.closing) {
      finish_block();
      text_ += ' ';
    } else if (tag.name == "br") {
      code_ += '\n';
    }
    return tag.end;
  }

  void emit(char c) {
    if (mode_ == Mode::kText) {
      text_ += c;
    } else {
      code_ += c;
    }
  }

  void finish_block() {
    auto block = trim(decode_entities(code_));
    if (!block.empty()) blocks_.push_back(std::move(block));
    code_.clear();
    mode_ = Mode::kText;
  }

  std::string_view body_;
  Mode mode_ = Mode::kText;
  std::string text_;
  std::string code_;
  std::vector<std::string> blocks_;
};

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out += text[i++];
      continue;
    }
    const auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += text[i++];
      continue;
    }
    const std::string_view name = text.substr(i + 1, semi - i - 1);
    std::optional<std::uint32_t> cp;
    if (!name.empty() && name[0] == '#') {
      if (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) {
        cp = parse_numeric_reference(name.substr(2), true);
      } else {
        cp = parse_numeric_reference(name.substr(1), false);
      }
    } else {
      for (const auto& e : kNamedEntities) {
        if (e.name == name) {
          cp = e.code_point;
          break;
        }
      }
    }
    if (cp) {
      append_utf8(out, *cp);
      i = semi + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::vector<std::string_view> word_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string strip_markup(std::string_view html) {
  std::string text;
  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] == '<') {
      if (auto tag = scan_tag(html, i)) {
        if (is_block_tag(tag->name)) text += ' ';
        i = tag->end;
        continue;
      }
    }
    text += html[i++];
  }
  return collapse_whitespace(decode_entities(text));
}

CleanPost clean(const Post& post) {
  BodyScanner scanner(post.body_html);
  scanner.run();
  CleanPost out;
  out.id = post.id;
  out.title_text = strip_markup(post.title);
  out.description_text = scanner.description();
  out.code_blocks = scanner.blocks();
  return out;
}

}  // namespace intent_miner::preprocess
