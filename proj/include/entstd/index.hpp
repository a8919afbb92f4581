#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entstd/binary_io.hpp"
#include "entstd/corpus.hpp"
#include "entstd/distance.hpp"
#include "entstd/encoder.hpp"
#include "entstd/errors.hpp"

namespace entstd {

enum class IndexMode : std::uint8_t { canonical_names = 0, names_plus_train = 1 };

inline const char* to_string(IndexMode m) {
  return m == IndexMode::canonical_names ? "canonical" : "extended";
}

inline IndexMode parse_index_mode(std::string_view s) {
  if (s == "canonical") return IndexMode::canonical_names;
  if (s == "extended") return IndexMode::names_plus_train;
  throw InvalidArgument("unknown index mode: " + std::string(s));
}

struct IndexedSurface {
  std::string entity_id;
  std::string text;
};

// Canonical names in entity order, followed by train mentions in file order
// when the extended mode is selected.
inline std::vector<IndexedSurface> index_surfaces(const Corpus& corpus, IndexMode mode) {
  std::vector<IndexedSurface> out;
  for (const auto& e : corpus.entities) out.push_back({e.id, e.canonical_name});
  if (mode == IndexMode::names_plus_train)
    for (const auto& m : corpus.train) out.push_back({m.entity_id, m.surface});
  return out;
}

struct Hit {
  std::string entity_id;
  double distance;

  friend bool operator==(const Hit&, const Hit&) = default;
};

// What to do with an all-zero query under cosine distance.
enum class ZeroQuery {
  reject,     // InvalidArgument
  rank_last,  // every entity at the maximal distance 2, in row order
};

// Precomputed entity embeddings. Immutable once built; rows are stored as
// 32-bit floats, the precision they are persisted with.
class EmbeddingIndex {
 public:
  EmbeddingIndex(std::size_t dim, Metric metric, IndexMode mode, std::vector<std::string> row_ids,
                 std::vector<float> rows)
      : dim_(dim), metric_(metric), mode_(mode), row_ids_(std::move(row_ids)), rows_(std::move(rows)) {
    if (row_ids_.empty()) throw DataError("cannot build an index over an empty entity set");
    if (dim_ == 0 || rows_.size() != row_ids_.size() * dim_)
      throw InvalidArgument("index rows do not match id count and dimension");
    for (float v : rows_)
      if (!std::isfinite(v)) throw InvalidArgument("non-finite value in index row");
    std::unordered_map<std::string, std::size_t> ordinal;
    row_entity_.reserve(row_ids_.size());
    for (const auto& id : row_ids_) {
      auto [it, inserted] = ordinal.try_emplace(id, entity_ids_.size());
      if (inserted) entity_ids_.push_back(id);
      row_entity_.push_back(it->second);
    }
    row_norms_.reserve(row_ids_.size());
    for (std::size_t r = 0; r < row_ids_.size(); ++r)
      row_norms_.push_back(std::sqrt(squared_norm(row(r))));
    digest_ = fnv1a64(std::span<const std::uint8_t>(serialize().buffer()));
  }

  std::size_t dim() const noexcept { return dim_; }
  Metric metric() const noexcept { return metric_; }
  IndexMode mode() const noexcept { return mode_; }
  std::size_t row_count() const noexcept { return row_ids_.size(); }
  std::size_t entity_count() const noexcept { return entity_ids_.size(); }
  const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }
  const std::vector<std::string>& entity_ids() const noexcept { return entity_ids_; }
  std::uint64_t digest() const noexcept { return digest_; }
  std::span<const float> row(std::size_t r) const { return {rows_.data() + r * dim_, dim_}; }
  const std::vector<float>& data() const noexcept { return rows_; }

  friend bool operator==(const EmbeddingIndex& a, const EmbeddingIndex& b) {
    return a.dim_ == b.dim_ && a.metric_ == b.metric_ && a.mode_ == b.mode_ &&
           a.row_ids_ == b.row_ids_ && a.rows_ == b.rows_ && a.digest_ == b.digest_;
  }

  // Everything the index file holds before its trailing digest.
  binary::Writer serialize() const {
    binary::Writer w;
    w.header(binary::kIndexMagic);
    w.u8(static_cast<std::uint8_t>(metric_));
    w.u8(static_cast<std::uint8_t>(mode_));
    w.u32(static_cast<std::uint32_t>(dim_));
    w.u64(row_ids_.size());
    for (const auto& id : row_ids_) w.str(id);
    for (float v : rows_) w.f32(v);
    return w;
  }

  // Exact scan. Entities are ranked by their closest row; ties (in distance,
  // then within an entity) go to the earlier row.
  std::vector<Hit> query(std::span<const double> q, std::size_t k,
                         ZeroQuery zero = ZeroQuery::reject) const {
    if (q.size() != dim_)
      throw InvalidArgument("query dimension " + std::to_string(q.size()) + " != index dimension " +
                            std::to_string(dim_));
    for (double v : q)
      if (!std::isfinite(v)) throw InvalidArgument("non-finite query component");
    if (k == 0) return {};

    struct Best {
      double distance;
      std::size_t row;
    };
    std::vector<Best> best(entity_ids_.size(), Best{0.0, row_ids_.size()});
    auto offer = [&](std::size_t r, double d) {
      auto& b = best[row_entity_[r]];
      if (b.row == row_ids_.size() || d < b.distance) b = {d, r};
    };

    if (metric_ == Metric::cosine) {
      const double nq = std::sqrt(squared_norm(q));
      if (nq == 0.0) {
        if (zero == ZeroQuery::reject) throw InvalidArgument("zero query vector under cosine distance");
        for (std::size_t r = 0; r < row_ids_.size(); ++r) offer(r, 2.0);
      } else {
        // Only nonzero query components contribute, in index order, so the
        // sum is bitwise equal to the dense dot product.
        std::vector<std::size_t> nz;
        for (std::size_t i = 0; i < dim_; ++i)
          if (q[i] != 0.0) nz.push_back(i);
        for (std::size_t r = 0; r < row_ids_.size(); ++r) {
          if (row_norms_[r] == 0.0) throw InvalidArgument("zero index row under cosine distance");
          const float* row_data = rows_.data() + r * dim_;
          double uv = 0.0;
          for (std::size_t i : nz) uv += q[i] * static_cast<double>(row_data[i]);
          offer(r, cosine_from_parts(uv, nq, row_norms_[r]));
        }
      }
    } else {
      for (std::size_t r = 0; r < row_ids_.size(); ++r) offer(r, distance(metric_, q, row(r)));
    }

    std::vector<std::size_t> order(best.size());
    for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
    const std::size_t n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (best[a].distance != best[b].distance)
                          return best[a].distance < best[b].distance;
                        return best[a].row < best[b].row;
                      });
    std::vector<Hit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) hits.push_back({entity_ids_[order[i]], best[order[i]].distance});
    return hits;
  }

 private:
  std::size_t dim_;
  Metric metric_;
  IndexMode mode_;
  std::vector<std::string> row_ids_;
  std::vector<float> rows_;
  std::vector<std::string> entity_ids_;
  std::vector<std::size_t> row_entity_;
  std::vector<double> row_norms_;
  std::uint64_t digest_ = 0;
};

inline std::vector<Hit> query(const EmbeddingIndex& index, std::span<const double> q, std::size_t k,
                              ZeroQuery zero = ZeroQuery::reject) {
  return index.query(q, k, zero);
}

inline EmbeddingIndex build_index(std::span<const Vector> vectors,
                                  std::span<const std::string> entity_ids, Metric metric,
                                  IndexMode mode) {
  if (vectors.size() != entity_ids.size()) throw InvalidArgument("vector and id counts differ");
  if (vectors.empty()) throw DataError("cannot build an index over an empty entity set");
  const std::size_t dim = vectors.front().size();
  std::vector<float> rows;
  rows.reserve(vectors.size() * dim);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw InvalidArgument("inconsistent embedding dimensions");
    for (double x : v) rows.push_back(static_cast<float>(x));
  }
  return EmbeddingIndex(dim, metric, mode, {entity_ids.begin(), entity_ids.end()}, std::move(rows));
}

// One encoder call per indexed surface, chunked so that the double-precision
// batch never holds more than a slice of the rows.
template <TextEncoder E>
EmbeddingIndex build_index(const E& encoder, const Corpus& corpus, IndexMode mode, Metric metric) {
  constexpr std::size_t kChunk = 256;
  const auto surfaces = index_surfaces(corpus, mode);
  if (surfaces.empty()) throw DataError("cannot build an index over an empty entity set");
  std::vector<std::string> ids;
  std::vector<float> rows;
  std::size_t dim = 0;
  for (std::size_t start = 0; start < surfaces.size(); start += kChunk) {
    std::vector<std::string> texts;
    for (std::size_t i = start; i < std::min(start + kChunk, surfaces.size()); ++i) {
      texts.push_back(surfaces[i].text);
      ids.push_back(surfaces[i].entity_id);
    }
    for (const auto& v : encoder.encode_batch(texts)) {
      if (dim == 0) dim = v.size();
      if (v.size() != dim) throw InvalidArgument("inconsistent embedding dimensions");
      for (double x : v) rows.push_back(static_cast<float>(x));
    }
  }
  return EmbeddingIndex(dim, metric, mode, std::move(ids), std::move(rows));
}

inline void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  auto w = index.serialize();
  w.seal();
  w.save(path);
}

inline EmbeddingIndex load_index(const std::filesystem::path& path) {
  auto r = binary::Reader::from_file(path);
  r.verify_digest();
  r.expect_header(binary::kIndexMagic);
  const auto metric_tag = r.u8();
  const auto mode_tag = r.u8();
  if (metric_tag > static_cast<std::uint8_t>(Metric::squared_euclidean) ||
      mode_tag > static_cast<std::uint8_t>(IndexMode::names_plus_train))
    throw CorruptFileError(path.string() + ": unknown metric or mode tag");
  const std::size_t dim = r.u32();
  const std::uint64_t n_rows = r.u64();
  std::vector<std::string> ids;
  for (std::uint64_t i = 0; i < n_rows; ++i) {
    if (r.remaining() < 4) throw CorruptFileError(path.string() + ": truncated");
    ids.push_back(r.str());
  }
  if (r.remaining() != n_rows * dim * sizeof(float))
    throw CorruptFileError(path.string() + ": row block size mismatch");
  std::vector<float> rows(n_rows * dim);
  for (float& v : rows) v = r.f32();
  try {
    EmbeddingIndex index(dim, static_cast<Metric>(metric_tag), static_cast<IndexMode>(mode_tag),
                         std::move(ids), std::move(rows));
    if (index.digest() != r.stored_digest())
      throw CorruptFileError(path.string() + ": digest mismatch");
    return index;
  } catch (const InvalidArgument& e) {
    throw CorruptFileError(path.string() + ": " + e.what());
  }
}

}  // namespace entstd
