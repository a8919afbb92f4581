#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "entstd/errors.hpp"
#include "entstd/hash.hpp"
#include "entstd/text.hpp"

namespace entstd {

// Inclusive range of character n-gram lengths.
struct NgramRange {
  int lo = 2;
  int hi = 4;

  friend bool operator==(const NgramRange&, const NgramRange&) = default;

  void validate() const {
    if (lo < 1 || lo > hi) throw InvalidArgument("invalid n-gram range");
  }
};

inline constexpr std::string_view kBeginMarker = "^";
inline constexpr std::string_view kEndMarker = "$";

struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Sorted by index, indices unique.
using SparseVector = std::vector<SparseEntry>;

// Character n-grams (over code points) of `text` padded with one boundary
// marker on each side, in order of occurrence, duplicates kept.
inline std::vector<std::string> char_ngrams(std::string_view text, NgramRange range) {
  range.validate();
  std::vector<std::string_view> cps;
  cps.push_back(kBeginMarker);
  for (auto cp : utf8_codepoints(text)) cps.push_back(cp);
  cps.push_back(kEndMarker);

  std::vector<std::string> grams;
  for (int n = range.lo; n <= range.hi; ++n) {
    const auto len = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + len <= cps.size(); ++i) {
      std::string g;
      for (std::size_t k = 0; k < len; ++k) g.append(cps[i + k]);
      grams.push_back(std::move(g));
    }
  }
  return grams;
}

inline std::uint32_t feature_bucket(std::string_view gram, std::size_t feature_dim) {
  return static_cast<std::uint32_t>(fnv1a64(gram) % feature_dim);
}

// Hashed, L2-normalized character n-gram counts of the canonicalized text.
inline SparseVector featurize(std::string_view text, std::size_t feature_dim,
                              NgramRange range) {
  if (feature_dim == 0) throw InvalidArgument("feature_dim must be positive");
  const std::string canonical = canonicalize(text);
  if (canonical.empty()) throw InvalidArgument("cannot featurize empty text");

  std::map<std::uint32_t, double> counts;
  for (const auto& g : char_ngrams(canonical, range)) counts[feature_bucket(g, feature_dim)] += 1.0;

  double norm = 0.0;
  for (const auto& [_, c] : counts) norm += c * c;
  norm = std::sqrt(norm);

  SparseVector out;
  out.reserve(counts.size());
  for (const auto& [idx, c] : counts) out.push_back({idx, c / norm});
  return out;
}

}  // namespace entstd
