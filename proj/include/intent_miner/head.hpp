#pragma once

// Trainable fusion head.
//
//   pool(x)  = tanh(x Wp + bp)          (identity unless fine_tune_pooler)
//   merged   = relu([pool(title) | pool(desc)] Wm + bm)
//   fused    = relu([merged | features] Wf + bf)
//   scores   = sigmoid(fused Wo + bo)   one independent output per intention
//
// Weights are stored input-major (rows = fan-in), so a batch of row vectors
// X maps to X W + b. The pooler is shared by title and description.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "intent_miner/core_model.hpp"
#include "intent_miner/embedding.hpp"
#include "intent_miner/features.hpp"
#include "intent_miner/preprocess.hpp"

namespace intent_miner::head {

using Matrix = Eigen::MatrixXd;

struct HeadConfig {
  std::size_t embedding_dim = 768;
  std::size_t merge_dim = 256;
  std::size_t fusion_dim = 64;
  bool fine_tune_pooler = false;
  double lr_pooler = 1e-4;
  double lr_head = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 42;
  double threshold = 0.5;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static HeadConfig from_json(const nlohmann::json& j);
};

enum class Component { kPooler, kHead };

// Trainable tensors. Biases are 1 x n row vectors. The pooler tensors are
// empty when the pooler is disabled.
struct HeadParams {
  Matrix pooler_w, pooler_b;
  Matrix merge_w, merge_b;
  Matrix fusion_w, fusion_b;
  Matrix output_w, output_b;

  bool has_pooler() const { return pooler_w.size() > 0; }

  // Visits every present tensor in a fixed order.
  void for_each(const std::function<void(std::string_view name, Component, Matrix&)>& fn);
  void for_each(const std::function<void(std::string_view name, Component, const Matrix&)>& fn) const;

  // Same shapes, all zeros.
  HeadParams zeros_like() const;
};

using Gradients = HeadParams;

struct HeadModel {
  HeadConfig config;
  HeadParams params;
  features::Standardizer standardizer;
  embedding::ProviderSpec provider;
};

// He-uniform for the ReLU layers, Glorot-uniform for the output layer, zero
// biases; the pooler starts as identity so pool(x) = tanh(x).
HeadModel init_model(const HeadConfig& config, std::uint64_t seed);

// A batch of rows. features are already standardized.
struct Batch {
  Matrix title;     // B x E
  Matrix desc;      // B x E
  Matrix features;  // B x 14
  Matrix targets;   // B x 7, 0/1 (may be empty for inference)

  Eigen::Index size() const { return title.rows(); }
};

// Intermediate activations of a forward pass.
struct ForwardTrace {
  Matrix title_pooled, desc_pooled;  // tanh outputs (or the raw inputs)
  Matrix concat;
  Matrix merge_pre, merge_act;
  Matrix fusion_in;
  Matrix fusion_pre, fusion_act;
  Matrix logits;
  Matrix probs;
};

// Throws ShapeError naming the offending layer.
ForwardTrace forward_batch(const HeadParams& params, const Matrix& title, const Matrix& desc,
                           const Matrix& features);

PredictionScores forward(const HeadModel& model, std::span<const double> title_emb,
                         std::span<const double> desc_emb, const features::FeatureVector& features);

// Sum over the seven outputs of binary cross-entropy. Probabilities are
// clamped to [1e-12, 1 - 1e-12].
double loss(const PredictionScores& scores, IntentionLabelSet target);

// Mean over rows of the summed BCE.
double batch_loss(const Matrix& probs, const Matrix& targets);

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

// Exact gradients of batch_loss with respect to every present tensor.
BackwardResult backward(const HeadParams& params, const Batch& batch);

// Threshold, then at-least-one (argmax, lowest index on ties), then `other`
// exclusivity.
IntentionLabelSet refine(const PredictionScores& scores, double threshold = 0.5);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  bool stopped_early = false;
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with the pooler and head learning
// rates from the config; minibatches reshuffled every epoch from the config
// seed. Returns the parameters of the epoch with the lowest validation loss.
// Throws TrainingError on a non-finite loss.
HeadParams train_params(const HeadConfig& config, const Batch& train, const Batch& validation,
                        TrainingLog* log);

// ---- pipeline ----------------------------------------------------------------

// Everything needed to score a cleaned post.
struct IntentModel {
  HeadModel head;
  std::optional<codeblock::CodeBlockClassifier> code_classifier;
  features::Lexicon lexicon;

  features::FeatureExtractor extractor() const;
};

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const IntentModel& model);
IntentModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const IntentModel& model);
IntentModel load_model(const std::filesystem::path& path);

// Embeddings and raw features for one post.
struct EncodedPost {
  embedding::Embedding title;
  embedding::Embedding desc;
  features::RawFeatures raw_features{};
};

EncodedPost encode(const preprocess::CleanPost& post, embedding::EmbeddingProvider& provider,
                   const features::FeatureExtractor& extractor);

// Stacks encoded posts into a batch, standardizing features.
Batch make_batch(std::span<const EncodedPost> posts, std::span<const IntentionLabelSet> labels,
                 const features::Standardizer& standardizer, std::size_t embedding_dim);

// Fits the standardizer on `train`, then trains the head.
IntentModel train(const HeadConfig& config, std::span<const EncodedPost> train_posts,
                  std::span<const IntentionLabelSet> train_labels,
                  std::span<const EncodedPost> validation_posts,
                  std::span<const IntentionLabelSet> validation_labels,
                  const embedding::ProviderSpec& provider,
                  std::optional<codeblock::CodeBlockClassifier> code_classifier,
                  features::Lexicon lexicon, TrainingLog* log);

struct Prediction {
  PredictionScores scores{};
  IntentionLabelSet labels;
};

Prediction predict(const IntentModel& model, const EncodedPost& encoded);
Prediction predict(const IntentModel& model, const preprocess::CleanPost& post,
                   embedding::EmbeddingProvider& provider);

}  // namespace intent_miner::head
