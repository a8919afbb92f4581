#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "entstd/encoder.hpp"
#include "entstd/mining.hpp"

namespace entstd {

// Same shape as EncoderParams::weights / bias.
struct Gradients {
  std::vector<double> weights;
  std::vector<double> bias;

  static Gradients like(const EncoderParams& p) {
    return {std::vector<double>(p.weights.size(), 0.0), std::vector<double>(p.bias.size(), 0.0)};
  }
  void zero() {
    std::fill(weights.begin(), weights.end(), 0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
  }
};

struct LossConfig {
  double margin = 2.0;
  Metric metric = Metric::cosine;
  // batch_all or batch_hard; hybrid is resolved per epoch by the trainer.
  Strategy strategy = Strategy::batch_all;
};

struct LossResult {
  double loss = 0.0;
  CategoryCounts counts;
};

// Strategy loss on the encoded batch and its exact gradient w.r.t. weights
// and bias, written into `grads` (overwritten, not accumulated).
inline LossResult loss_and_gradients(const EncoderParams& params,
                                     std::span<const SparseVector> features,
                                     std::span<const std::size_t> labels, const LossConfig& cfg,
                                     Gradients& grads) {
  if (cfg.strategy == Strategy::hybrid)
    throw InvalidArgument("loss_and_gradients needs a concrete mining strategy");
  const std::size_t n = features.size();
  const std::size_t dim = params.out_dim;

  std::vector<Vector> y;
  y.reserve(n);
  for (const auto& f : features) y.push_back(encode_features(params, f));
  const DistanceMatrix d(y, cfg.metric);

  // Coefficient of each pairwise distance d(i, j), i < j, in the loss.
  std::vector<double> coef(n * n, 0.0);
  auto pull = [&](std::size_t i, std::size_t j, double scale) {
    coef[std::min(i, j) * n + std::max(i, j)] += scale;
  };

  LossResult result;
  if (cfg.strategy == Strategy::batch_all) {
    const auto r = batch_all_loss(d, labels, cfg.margin);
    result = {r.loss, r.counts};
    const std::size_t active = r.counts.hard + r.counts.semihard;
    if (active > 0) {
      const double w = 1.0 / static_cast<double>(active);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t p = 0; p < n; ++p) {
          if (p == a || labels[p] != labels[a]) continue;
          for (std::size_t q = 0; q < n; ++q) {
            if (labels[q] == labels[a]) continue;
            if (d(a, p) - d(a, q) + cfg.margin <= 0.0) continue;
            pull(a, p, w);
            pull(a, q, -w);
          }
        }
    }
  } else {
    const auto r = batch_hard_loss(d, labels, cfg.margin);
    result = {r.loss, r.counts};
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a < n; ++a) {
      const auto& s = r.per_anchor[a];
      if (s.d_ap_max - s.d_an_min + cfg.margin <= 0.0) continue;
      pull(a, s.positive, w);
      pull(a, s.negative, -w);
    }
  }

  // dL/dy, one row per sample.
  std::vector<Vector> dy(n, Vector(dim, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (const double c = coef[i * n + j]; c != 0.0)
        accumulate_distance_gradient(cfg.metric, y[i], y[j], c, dy[i], dy[j]);

  // Back through tanh and the linear layer.
  if (grads.weights.size() != params.weights.size() || grads.bias.size() != params.bias.size())
    grads = Gradients::like(params);
  else
    grads.zero();
  for (std::size_t i = 0; i < n; ++i) {
    Vector dz(dim);
    for (std::size_t o = 0; o < dim; ++o) dz[o] = dy[i][o] * (1.0 - y[i][o] * y[i][o]);
    for (std::size_t o = 0; o < dim; ++o) grads.bias[o] += dz[o];
    for (const auto& [idx, value] : features[i]) {
      double* g = grads.weights.data() + static_cast<std::size_t>(idx) * dim;
      for (std::size_t o = 0; o < dim; ++o) g[o] += value * dz[o];
    }
  }
  return result;
}

inline LossResult loss_and_gradients(const EncoderParams& params, std::span<const std::string> texts,
                                     std::span<const std::size_t> labels, const LossConfig& cfg,
                                     Gradients& grads) {
  if (texts.size() != labels.size()) throw InvalidArgument("text and label counts differ");
  std::vector<SparseVector> features;
  features.reserve(texts.size());
  for (const auto& t : texts) features.push_back(featurize(params, t));
  return loss_and_gradients(params, std::span<const SparseVector>(features), labels, cfg, grads);
}

}  // namespace entstd
