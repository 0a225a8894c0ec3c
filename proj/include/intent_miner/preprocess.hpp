#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "intent_miner/core_model.hpp"

namespace intent_miner::preprocess {

struct CleanPost {
  std::string id;
  std::string title_text;
  // Body with markup and code blocks removed.
  std::string description_text;
  // Code block contents in document order.
  std::vector<std::string> code_blocks;
};

// Splits a post body into plain description text and code blocks.
//
// Code blocks are <pre> regions (usually <pre><code>...</code></pre>) and
// Markdown ``` fences. Their inner text, with tags dropped and entities
// decoded, goes to code_blocks; they leave no trace in the description.
// Inline <code> spans stay in the description as plain text. The scanner is
// lexical and never fails: an unterminated tag or <pre> is recovered by
// treating the rest of the input as text or code respectively.
CleanPost clean(const Post& post);

// Strips tags from a fragment of markup, decodes entities and collapses
// whitespace. Used for titles.
std::string strip_markup(std::string_view html);

// Decodes named, decimal and hex character references. Unknown entities are
// left as-is.
std::string decode_entities(std::string_view text);

// Replaces runs of whitespace with one space and trims both ends.
std::string collapse_whitespace(std::string_view text);

// Maximal runs of non-whitespace characters.
std::vector<std::string_view> word_tokens(std::string_view text);

}  // namespace intent_miner::preprocess
