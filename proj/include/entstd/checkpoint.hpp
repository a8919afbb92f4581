#pragma once

#include <cstdint>
#include <filesystem>

#include "entstd/binary_io.hpp"
#include "entstd/encoder.hpp"

namespace entstd {

// Type tag following the model container header.
enum class ModelKind : std::uint32_t { ngram_encoder = 1, tfidf = 2 };

namespace binary {

inline void model_header(Writer& w, ModelKind kind) {
  w.header(kModelMagic);
  w.u32(static_cast<std::uint32_t>(kind));
}

inline Reader open_model(const std::filesystem::path& path, ModelKind expected) {
  auto r = Reader::from_file(path);
  r.verify_digest();
  r.expect_header(kModelMagic);
  const auto kind = r.u32();
  if (kind != static_cast<std::uint32_t>(expected))
    throw CorruptFileError(path.string() + ": model type tag " + std::to_string(kind) +
                           ", expected " + std::to_string(static_cast<std::uint32_t>(expected)));
  return r;
}

}  // namespace binary

inline ModelKind peek_model_kind(const std::filesystem::path& path) {
  auto r = binary::Reader::from_file(path);
  r.verify_digest();
  r.expect_header(binary::kModelMagic);
  const auto kind = r.u32();
  if (kind != static_cast<std::uint32_t>(ModelKind::ngram_encoder) &&
      kind != static_cast<std::uint32_t>(ModelKind::tfidf))
    throw CorruptFileError(path.string() + ": unknown model type tag " + std::to_string(kind));
  return static_cast<ModelKind>(kind);
}

// Layout after the container header and type tag: u64 feature_dim, u32
// ngram lo, u32 ngram hi, u64 out_dim, weights and bias as little-endian
// f64, then the u64 digest. Parameters are kept at full precision so a
// checkpoint round-trips bitwise.
inline void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
  params.validate();
  binary::Writer w;
  binary::model_header(w, ModelKind::ngram_encoder);
  w.u64(params.feature_dim);
  w.u32(static_cast<std::uint32_t>(params.ngrams.lo));
  w.u32(static_cast<std::uint32_t>(params.ngrams.hi));
  w.u64(params.out_dim);
  for (double v : params.weights) w.f64(v);
  for (double v : params.bias) w.f64(v);
  w.seal();
  w.save(path);
}

inline EncoderParams load_encoder(const std::filesystem::path& path) {
  auto r = binary::open_model(path, ModelKind::ngram_encoder);
  EncoderParams p;
  p.feature_dim = r.u64();
  p.ngrams.lo = static_cast<int>(r.u32());
  p.ngrams.hi = static_cast<int>(r.u32());
  p.out_dim = r.u64();
  const std::size_t n_weights = p.feature_dim * p.out_dim;
  if (p.feature_dim == 0 || p.out_dim == 0 ||
      r.remaining() != (n_weights + p.out_dim) * sizeof(double))
    throw CorruptFileError(path.string() + ": parameter block size mismatch");
  p.weights.resize(n_weights);
  for (double& v : p.weights) v = r.f64();
  p.bias.resize(p.out_dim);
  for (double& v : p.bias) v = r.f64();
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptFileError(path.string() + ": " + e.what());
  }
  return p;
}

}  // namespace entstd
