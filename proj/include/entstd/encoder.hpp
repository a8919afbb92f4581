#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entstd/distance.hpp"
#include "entstd/errors.hpp"
#include "entstd/features.hpp"
#include "entstd/hash.hpp"

namespace entstd {

// Built-in backbone: hashed character n-grams -> one linear layer -> tanh.
// Weights are stored row-major, one row of out_dim values per feature bucket.
struct EncoderParams {
  std::size_t feature_dim = 16384;
  NgramRange ngrams{2, 4};
  std::size_t out_dim = 128;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;

  std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }

  std::span<const double> row(std::size_t feature) const {
    return {weights.data() + feature * out_dim, out_dim};
  }

  void validate() const {
    if (feature_dim == 0 || out_dim == 0) throw InvalidArgument("encoder dimensions must be positive");
    ngrams.validate();
    if (weights.size() != feature_dim * out_dim || bias.size() != out_dim)
      throw InvalidArgument("encoder parameter shape mismatch");
    for (double w : weights)
      if (!std::isfinite(w)) throw InvalidArgument("non-finite encoder weight");
    for (double b : bias)
      if (!std::isfinite(b)) throw InvalidArgument("non-finite encoder bias");
  }

  static EncoderParams zeros(std::size_t feature_dim, NgramRange ngrams, std::size_t out_dim) {
    EncoderParams p;
    p.feature_dim = feature_dim;
    p.ngrams = ngrams;
    p.out_dim = out_dim;
    p.weights.assign(feature_dim * out_dim, 0.0);
    p.bias.assign(out_dim, 0.0);
    p.validate();
    return p;
  }

  // Weights uniform in [-s, s] with s = scale * sqrt(6 / (fan_in + fan_out)),
  // bias zero.
  static EncoderParams random(std::size_t feature_dim, NgramRange ngrams, std::size_t out_dim,
                              std::uint64_t seed, double scale = 1.0) {
    auto p = zeros(feature_dim, ngrams, out_dim);
    auto rng = make_rng(seed, rng_stream::kInit);
    const double limit =
        scale * std::sqrt(6.0 / static_cast<double>(feature_dim + out_dim));
    for (double& w : p.weights) {
      const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      w = (2.0 * unit - 1.0) * limit;
    }
    return p;
  }
};

// Pre-activation W^T f + c for an already featurized input.
inline Vector preactivation(const EncoderParams& params, const SparseVector& features) {
  Vector z(params.bias);
  for (const auto& [idx, value] : features) {
    const double* w = params.weights.data() + static_cast<std::size_t>(idx) * params.out_dim;
    for (std::size_t o = 0; o < params.out_dim; ++o) z[o] += value * w[o];
  }
  return z;
}

inline Vector encode_features(const EncoderParams& params, const SparseVector& features) {
  Vector y = preactivation(params, features);
  for (double& v : y) v = std::tanh(v);
  return y;
}

inline SparseVector featurize(const EncoderParams& params, std::string_view text) {
  return featurize(text, params.feature_dim, params.ngrams);
}

inline Vector encode(const EncoderParams& params, std::string_view text) {
  return encode_features(params, featurize(params, text));
}

inline std::vector<Vector> encode_batch(const EncoderParams& params,
                                        std::span<const std::string> texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (canonicalize(texts[i]).empty())
      throw InvalidArgument("empty text at batch index " + std::to_string(i));
    out.push_back(encode(params, texts[i]));
  }
  return out;
}

// Anything that maps a batch of texts to equally sized embeddings. Used by
// the index builder and the evaluation harness so the trained backbone, the
// TF-IDF baseline and remote providers are interchangeable.
template <class E>
concept TextEncoder = requires(const E& enc, std::span<const std::string> texts) {
  { enc.encode_batch(texts) } -> std::same_as<std::vector<Vector>>;
  { enc.dim() } -> std::convertible_to<std::size_t>;
};

class NgramEncoder {
 public:
  explicit NgramEncoder(const EncoderParams& params) : params_(&params) {}

  std::vector<Vector> encode_batch(std::span<const std::string> texts) const {
    return entstd::encode_batch(*params_, texts);
  }
  std::size_t dim() const noexcept { return params_->out_dim; }
  const EncoderParams& params() const noexcept { return *params_; }

 private:
  const EncoderParams* params_;
};

static_assert(TextEncoder<NgramEncoder>);

}  // namespace entstd
