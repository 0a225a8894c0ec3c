#pragma once

// Deterministic stand-in data for tests and the acceptance run.

#include <array>
#include <cstdint>
#include <vector>

#include "intent_miner/codeblock.hpp"
#include "intent_miner/core_model.hpp"

namespace intent_miner::testing {

// Label counts of the annotated forum dataset, index order.
inline constexpr std::array<std::size_t, kNumIntentions> kReferenceLabelCounts = {149, 150, 86, 159, 23, 273, 86};
inline constexpr std::size_t kReferencePostCount = 784;
// Posts with one, two and three labels.
inline constexpr std::array<std::size_t, 3> kReferenceCardinality = {650, 126, 8};

// 784 posts whose label counts and cardinalities equal the reference
// numbers exactly. `other` only appears alone. Titles and bodies carry
// intention cue phrases mixed with filler, and many bodies hold code,
// error, config or shell blocks, so a model can learn something.
std::vector<AnnotatedPost> synthetic_dataset(std::uint64_t seed);

// Smaller variant with a given size (labels drawn from the same mix).
std::vector<AnnotatedPost> synthetic_dataset(std::uint64_t seed, std::size_t n);

// Code-block corpus with per-category vocabulary and an imbalanced class mix
// (code most frequent). Samples carry post ids "cb-<n>".
std::vector<codeblock::CodeBlockSample> synthetic_code_corpus(std::uint64_t seed, std::size_t n);

// Corpus whose classes use pairwise disjoint vocabularies.
std::vector<codeblock::CodeBlockSample> disjoint_vocabulary_corpus(std::uint64_t seed, std::size_t per_class);

}  // namespace intent_miner::testing
