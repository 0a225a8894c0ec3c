#pragma once

// Code-block content classification: a regex-style lexer, TF-IDF weighting,
// SMOTE oversampling and a multinomial naive Bayes classifier over the six
// content categories.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "intent_miner/core_model.hpp"

namespace intent_miner::codeblock {

// Identifiers, numbers, operator runs and single bracket characters.
struct CodeTokenStream {
  std::vector<std::string> tokens;
};

CodeTokenStream lex_code(std::string_view text);

// Sorted-index sparse vector.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  double dot(const SparseVector& other) const;
  double squared_norm() const;
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

double squared_distance(const SparseVector& a, const SparseVector& b);

struct TfidfModel {
  std::unordered_map<std::string, std::uint32_t> vocabulary;
  std::vector<double> idf;  // indexed by column
  std::size_t document_count = 0;

  std::size_t dimension() const { return idf.size(); }
};

// Vocabulary columns are assigned in order of first appearance in the corpus.
// idf(t) = ln((1 + N) / (1 + df(t))) + 1. Throws ValidationError on an empty
// corpus.
TfidfModel fit_tfidf(std::span<const CodeTokenStream> corpus);

// Raw-count tf times idf, L2-normalized. Out-of-vocabulary tokens are
// ignored; an all-OOV stream maps to the zero vector.
SparseVector transform(const TfidfModel& model, const CodeTokenStream& stream);

// Synthetic minority oversampling. Each synthetic point interpolates a
// uniformly drawn class member towards one of its k nearest neighbours
// (Euclidean, within the class). k is capped at samples.size() - 1.
// Throws ValidationError for fewer than two samples or k == 0.
std::vector<SparseVector> smote(std::span<const SparseVector> samples, std::size_t k,
                                std::size_t amount, std::uint64_t seed);

struct NaiveBayesModel {
  // classes[i] is the category modelled by row i.
  std::vector<ContentCategory> classes;
  std::vector<double> class_log_priors;
  // Row-major classes.size() x vocabulary_size.
  std::vector<double> feature_log_likelihoods;
  std::size_t vocabulary_size = 0;
  double alpha = 1.0;

  std::span<const double> log_likelihood_row(std::size_t cls) const {
    return {feature_log_likelihoods.data() + cls * vocabulary_size, vocabulary_size};
  }
};

// Multinomial NB with additive smoothing. Every class in `classes` must occur
// in y; a missing one is reported by name.
NaiveBayesModel train_nb(std::span<const SparseVector> X, std::span<const ContentCategory> y,
                         std::span<const ContentCategory> classes, std::size_t vocabulary_size,
                         double alpha);

// Joint log-likelihoods log P(c) + sum_t x_t log P(t|c), one per model class.
std::vector<double> joint_log_likelihood(const NaiveBayesModel& model, const SparseVector& x);

// Posterior over the six categories (zero for categories the model lacks).
using ContentCategoryDistribution = std::array<double, kNumContentCategories>;

ContentCategoryDistribution predict_proba(const NaiveBayesModel& model, const SparseVector& x);

// A sample counts as correct when any category with posterior > 0.5 is in
// its ground-truth set.
struct LabeledVector {
  SparseVector x;
  std::vector<ContentCategory> truth;
};

double threshold_accuracy(const NaiveBayesModel& model, std::span<const LabeledVector> samples);

// Highest validation accuracy wins; ties go to the smaller alpha.
double grid_search_alpha(std::span<const SparseVector> train_X,
                         std::span<const ContentCategory> train_y,
                         std::span<const ContentCategory> classes, std::size_t vocabulary_size,
                         std::span<const LabeledVector> validation, std::span<const double> grid);

inline constexpr std::array<double, 5> kDefaultAlphaGrid = {0.01, 0.1, 0.5, 1.0, 2.0};

// Trained lexer + TF-IDF + NB bundle used by the intent pipeline.
struct CodeBlockClassifier {
  TfidfModel tfidf;
  NaiveBayesModel nb;
};

// Concatenates the blocks with newlines and classifies them. No blocks gives
// all mass on natural-language.
ContentCategoryDistribution predict_content(const CodeBlockClassifier& clf,
                                            std::span<const std::string> blocks);
ContentCategoryDistribution predict_content(const NaiveBayesModel& model, const TfidfModel& tfidf,
                                            std::string_view block_text);

// ---- corpus handling ------------------------------------------------------

struct CodeBlockSample {
  std::string text;
  std::vector<ContentCategory> categories;  // non-empty; first is the training class
  std::optional<std::string> post_id;       // links a block to its source post
};

std::vector<CodeBlockSample> parse_corpus(std::string_view jsonl);
std::vector<CodeBlockSample> load_corpus(const std::filesystem::path& path);

struct TrainingOptions {
  std::uint64_t seed = 42;
  std::vector<double> alpha_grid{kDefaultAlphaGrid.begin(), kDefaultAlphaGrid.end()};
  std::size_t smote_k = 5;
  bool use_smote = true;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
};

struct TrainingReport {
  double best_alpha = 0.0;
  std::vector<std::pair<double, double>> validation_accuracy;  // (alpha, accuracy)
  double test_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  std::size_t test_size = 0;
  std::size_t synthetic_count = 0;
};

// Shuffles the corpus, splits it train/validation/test, oversamples minority
// classes in the training split up to the majority count, grid-searches
// alpha on validation and reports test accuracy.
CodeBlockClassifier train_classifier(std::span<const CodeBlockSample> corpus,
                                     const TrainingOptions& options, TrainingReport* report);

double evaluate_classifier(const CodeBlockClassifier& clf, std::span<const CodeBlockSample> corpus);

nlohmann::json to_json(const CodeBlockClassifier& clf);
CodeBlockClassifier classifier_from_json(const nlohmann::json& j);

}  // namespace intent_miner::codeblock
