#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "entstd/encoder.hpp"
#include "entstd/gradients.hpp"

namespace entstd {

enum class OptimizerKind { sgd, adam };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw InvalidArgument("unknown optimizer: " + std::string(s));
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Plain SGD or Adam without weight decay.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const EncoderParams& params) : cfg_(cfg) {
    if (cfg_.kind == OptimizerKind::adam) {
      m_w_.assign(params.weights.size(), 0.0);
      v_w_.assign(params.weights.size(), 0.0);
      m_b_.assign(params.bias.size(), 0.0);
      v_b_.assign(params.bias.size(), 0.0);
    }
  }

  void step(EncoderParams& params, const Gradients& grads, double learning_rate) {
    if (cfg_.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.weights.size(); ++i)
        params.weights[i] -= learning_rate * grads.weights[i];
      for (std::size_t i = 0; i < params.bias.size(); ++i)
        params.bias[i] -= learning_rate * grads.bias[i];
      return;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    adam(params.weights, grads.weights, m_w_, v_w_, learning_rate, c1, c2);
    adam(params.bias, grads.bias, m_b_, v_b_, learning_rate, c1, c2);
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  void adam(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
            std::vector<double>& v, double lr, double c1, double c2) const {
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      if (m[i] == 0.0) continue;
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
    }
  }

  OptimizerConfig cfg_;
  std::size_t t_ = 0;
  std::vector<double> m_w_, v_w_, m_b_, v_b_;
};

}  // namespace entstd
