#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "intent_miner/features.hpp"
#include "intent_miner/rng.hpp"

namespace intent_miner::testing {

namespace {

head::Matrix random_matrix(Eigen::Index r, Eigen::Index c, double scale, rng::Engine& eng) {
  head::Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng::uniform(eng, -scale, scale);
  }
  return m;
}

struct Activation {
  double loss = 0.0;
  std::vector<bool> pattern;  // ReLU on/off for every unit
};

Activation evaluate(const head::HeadParams& p, const head::Batch& b) {
  const auto t = head::forward_batch(p, b.title, b.desc, b.features);
  Activation a;
  a.loss = head::batch_loss(t.probs, b.targets);
  for (const auto* m : {&t.merge_pre, &t.fusion_pre}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) a.pattern.push_back(m->data()[i] > 0.0);
  }
  return a;
}

}  // namespace

GradCheckResult gradient_check(std::uint64_t seed, double h, double floor) {
  rng::Engine eng(seed);
  head::HeadConfig config;
  config.embedding_dim = 2 + rng::below(eng, 5);
  config.merge_dim = 2 + rng::below(eng, 5);
  config.fusion_dim = 2 + rng::below(eng, 4);
  config.fine_tune_pooler = rng::below(eng, 2) == 1;
  const auto B = static_cast<Eigen::Index>(1 + rng::below(eng, 4));
  const auto E = static_cast<Eigen::Index>(config.embedding_dim);

  auto model = head::init_model(config, eng());
  auto& p = model.params;
  // Non-zero biases and a perturbed pooler so every term is exercised.
  if (p.has_pooler()) {
    p.pooler_w += random_matrix(E, E, 0.3, eng);
    p.pooler_b = random_matrix(1, E, 0.3, eng);
  }
  p.merge_b = random_matrix(1, p.merge_b.cols(), 0.3, eng);
  p.fusion_b = random_matrix(1, p.fusion_b.cols(), 0.3, eng);
  p.output_b = random_matrix(1, p.output_b.cols(), 0.3, eng);

  head::Batch batch;
  batch.title = random_matrix(B, E, 1.0, eng);
  batch.desc = random_matrix(B, E, 1.0, eng);
  batch.features = random_matrix(B, static_cast<Eigen::Index>(features::kFeatureDim), 1.5, eng);
  batch.targets = head::Matrix::Zero(B, static_cast<Eigen::Index>(kNumIntentions));
  for (Eigen::Index i = 0; i < batch.targets.size(); ++i) batch.targets.data()[i] = rng::below(eng, 2) ? 1.0 : 0.0;

  const auto analytic = head::backward(p, batch).grads;
  const auto base = evaluate(p, batch);

  GradCheckResult result;
  result.config = config;
  result.batch = static_cast<std::size_t>(B);

  std::vector<const head::Matrix*> grads;
  analytic.for_each([&](std::string_view, head::Component, const head::Matrix& g) { grads.push_back(&g); });

  std::size_t tensor = 0;
  p.for_each([&](std::string_view name, head::Component, head::Matrix& w) {
    const auto& g = *grads[tensor++];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w.data()[i];
      w.data()[i] = orig + h;
      const auto plus = evaluate(p, batch);
      w.data()[i] = orig - h;
      const auto minus = evaluate(p, batch);
      w.data()[i] = orig;
      if (plus.pattern != base.pattern || minus.pattern != base.pattern) {
        ++result.skipped_at_kinks;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * h);
      const double a = g.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = std::string(name);
      }
    }
  });
  return result;
}

}  // namespace intent_miner::testing
