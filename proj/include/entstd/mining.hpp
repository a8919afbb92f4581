#pragma once

#include <algorithm>
#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entstd/corpus.hpp"
#include "entstd/distance.hpp"
#include "entstd/errors.hpp"
#include "entstd/hash.hpp"

namespace entstd {

// Indices into a batch. Valid iff anchor != positive, label(anchor) ==
// label(positive) and label(anchor) != label(negative).
struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

enum class TripletCategory { easy, semihard, hard };

inline const char* to_string(TripletCategory c) {
  switch (c) {
    case TripletCategory::easy: return "easy";
    case TripletCategory::semihard: return "semihard";
    case TripletCategory::hard: return "hard";
  }
  return "unknown";
}

// max(d_ap - d_an + margin, 0)
inline double triplet_loss(double d_ap, double d_an, double margin) noexcept {
  return std::max(d_ap - d_an + margin, 0.0);
}

// With gap = d_an - d_ap: easy iff gap > margin, hard iff gap < 0,
// semihard otherwise. Both boundaries (gap == 0, gap == margin) are semihard.
inline TripletCategory classify_triplet(double d_ap, double d_an, double margin) noexcept {
  const double gap = d_an - d_ap;
  if (gap > margin) return TripletCategory::easy;
  if (gap < 0.0) return TripletCategory::hard;
  return TripletCategory::semihard;
}

template <std::equality_comparable Label>
std::vector<Triplet> enumerate_valid_triplets(std::span<const Label> labels) {
  std::vector<Triplet> out;
  const std::size_t n = labels.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || !(labels[p] == labels[a])) continue;
      for (std::size_t q = 0; q < n; ++q)
        if (!(labels[q] == labels[a])) out.push_back({a, p, q});
    }
  return out;
}

struct CategoryCounts {
  std::size_t hard = 0;
  std::size_t semihard = 0;
  std::size_t easy = 0;

  std::size_t total() const noexcept { return hard + semihard + easy; }
  void add(TripletCategory c) noexcept {
    switch (c) {
      case TripletCategory::hard: ++hard; break;
      case TripletCategory::semihard: ++semihard; break;
      case TripletCategory::easy: ++easy; break;
    }
  }
  CategoryCounts& operator+=(const CategoryCounts& o) noexcept {
    hard += o.hard;
    semihard += o.semihard;
    easy += o.easy;
    return *this;
  }
  friend bool operator==(const CategoryCounts&, const CategoryCounts&) = default;
};

// Row-major B x B matrix of pairwise embedding distances.
class DistanceMatrix {
 public:
  DistanceMatrix(std::span<const Vector> embeddings, Metric metric)
      : n_(embeddings.size()), d_(n_ * n_, 0.0) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double v = distance(metric, embeddings[i], embeddings[j]);
        d_[i * n_ + j] = v;
        d_[j * n_ + i] = v;
      }
    // The diagonal is never read by the miners, but cosine on a zero vector
    // must still be rejected for singleton batches.
    if (metric == Metric::cosine)
      for (const auto& e : embeddings)
        if (squared_norm(std::span<const double>(e)) == 0.0)
          throw InvalidArgument("zero vector under cosine distance");
  }

  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

namespace detail {

template <class Label>
void require_labels(std::span<const Vector> embeddings, std::span<const Label> labels) {
  if (embeddings.size() != labels.size())
    throw InvalidArgument("embedding and label counts differ");
}

template <class Label>
std::size_t count_equal(std::span<const Label> labels, const Label& l) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

}  // namespace detail

struct BatchAllResult {
  double loss = 0.0;
  CategoryCounts counts;
};

// Mean triplet loss over every valid triplet that is hard or semihard; easy
// triplets are excluded from both numerator and denominator. Zero when no
// non-easy triplet exists. Requires >= 2 classes and >= 1 class with >= 2
// samples.
template <std::equality_comparable Label>
BatchAllResult batch_all_loss(const DistanceMatrix& d, std::span<const Label> labels,
                              double margin) {
  const std::size_t n = labels.size();
  bool has_pair = false;
  bool has_two_classes = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(labels[i] == labels[0])) has_two_classes = true;
    if (detail::count_equal(labels, labels[i]) >= 2) has_pair = true;
  }
  if (!has_two_classes || !has_pair)
    throw MiningError("batch-all needs two classes and one class with two samples");

  BatchAllResult r;
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || !(labels[p] == labels[a])) continue;
      const double d_ap = d(a, p);
      for (std::size_t q = 0; q < n; ++q) {
        if (labels[q] == labels[a]) continue;
        const double d_an = d(a, q);
        const auto cat = classify_triplet(d_ap, d_an, margin);
        r.counts.add(cat);
        if (cat != TripletCategory::easy) sum += triplet_loss(d_ap, d_an, margin);
      }
    }
  const std::size_t active = r.counts.hard + r.counts.semihard;
  r.loss = active == 0 ? 0.0 : sum / static_cast<double>(active);
  return r;
}

template <std::equality_comparable Label>
BatchAllResult batch_all_loss(std::span<const Vector> embeddings, std::span<const Label> labels,
                              double margin, Metric metric) {
  detail::require_labels(embeddings, labels);
  return batch_all_loss(DistanceMatrix(embeddings, metric), labels, margin);
}

struct HardSelection {
  std::size_t positive;
  std::size_t negative;
  double d_ap_max;
  double d_an_min;
};

struct BatchHardResult {
  double loss = 0.0;
  std::vector<HardSelection> per_anchor;
  CategoryCounts counts;
};

// Per anchor: farthest positive and nearest negative, ties broken toward the
// lowest batch index. Loss is the mean over all B anchors.
template <std::equality_comparable Label>
BatchHardResult batch_hard_loss(const DistanceMatrix& d, std::span<const Label> labels,
                                double margin) {
  const std::size_t n = labels.size();
  BatchHardResult r;
  r.per_anchor.reserve(n);
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t pos = n, neg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      if (labels[j] == labels[a]) {
        if (pos == n || d(a, j) > d(a, pos)) pos = j;
      } else if (neg == n || d(a, j) < d(a, neg)) {
        neg = j;
      }
    }
    if (pos == n)
      throw MiningError("batch-hard: anchor " + std::to_string(a) + " has no positive");
    if (neg == n) throw MiningError("batch-hard: batch contains a single class");
    const HardSelection sel{pos, neg, d(a, pos), d(a, neg)};
    r.counts.add(classify_triplet(sel.d_ap_max, sel.d_an_min, margin));
    sum += triplet_loss(sel.d_ap_max, sel.d_an_min, margin);
    r.per_anchor.push_back(sel);
  }
  r.loss = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return r;
}

template <std::equality_comparable Label>
BatchHardResult batch_hard_loss(std::span<const Vector> embeddings, std::span<const Label> labels,
                                double margin, Metric metric) {
  detail::require_labels(embeddings, labels);
  return batch_hard_loss(DistanceMatrix(embeddings, metric), labels, margin);
}

enum class Strategy { batch_all, batch_hard, hybrid };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::batch_all: return "batch-all";
    case Strategy::batch_hard: return "batch-hard";
    case Strategy::hybrid: return "hybrid";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "batch-all") return Strategy::batch_all;
  if (s == "batch-hard") return Strategy::batch_hard;
  if (s == "hybrid") return Strategy::hybrid;
  throw InvalidArgument("unknown mining strategy: " + std::string(s));
}

struct MiningStrategy {
  Strategy kind = Strategy::hybrid;
  // Last batch-all epoch under hybrid (epochs are numbered from 1).
  std::size_t switch_epoch = 0;

  Strategy at_epoch(std::size_t epoch) const noexcept {
    if (kind != Strategy::hybrid) return kind;
    return epoch <= switch_epoch ? Strategy::batch_all : Strategy::batch_hard;
  }
};

// g same-entity sample references drawn for one class.
struct Group {
  std::string entity_id;
  std::vector<std::size_t> members;

  friend bool operator==(const Group&, const Group&) = default;
};

struct BatchPlan {
  std::vector<Group> groups;

  friend bool operator==(const BatchPlan&, const BatchPlan&) = default;

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.members.size();
    return n;
  }

  // Flattened sample indices with class labels (group position).
  void flatten(std::vector<std::size_t>& samples, std::vector<std::size_t>& labels) const {
    samples.clear();
    labels.clear();
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
      for (std::size_t m : groups[gi].members) {
        samples.push_back(m);
        labels.push_back(gi);
      }
  }
};

namespace detail {

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace detail

// Anchored contrastive groups: one epoch visits a random permutation of the
// eligible classes (>= 2 samples) in chunks of b; each class contributes g
// members, sampled without replacement when it has >= g samples and
// otherwise all of them topped up with replacement. Deterministic in
// (seed, epoch).
inline std::vector<BatchPlan> sample_batches(std::span<const MentionRecord> samples,
                                             std::size_t g, std::size_t b, std::uint64_t seed,
                                             std::size_t epoch) {
  if (g < 2 || b < 2) throw MiningError("group size and groups per batch must be >= 2");

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto [it, inserted] = members.try_emplace(samples[i].entity_id);
    if (inserted) order.push_back(samples[i].entity_id);
    it->second.push_back(i);
  }
  std::vector<std::string> eligible;
  for (const auto& id : order)
    if (members[id].size() >= 2) eligible.push_back(id);
  if (eligible.size() < b)
    throw MiningError("only " + std::to_string(eligible.size()) +
                      " classes with >= 2 samples, need " + std::to_string(b));

  auto rng = make_rng(seed, rng_stream::kBatches, epoch);
  std::shuffle(eligible.begin(), eligible.end(), rng);

  std::vector<BatchPlan> plans;
  const std::size_t n_batches = eligible.size() / b;
  plans.reserve(n_batches);
  for (std::size_t bi = 0; bi < n_batches; ++bi) {
    BatchPlan plan;
    for (std::size_t k = 0; k < b; ++k) {
      const auto& id = eligible[bi * b + k];
      std::vector<std::size_t> pool = members[id];
      Group group{id, {}};
      if (pool.size() >= g) {
        std::shuffle(pool.begin(), pool.end(), rng);
        group.members.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(g));
      } else {
        group.members = pool;
        while (group.members.size() < g)
          group.members.push_back(pool[detail::uniform_index(rng, pool.size())]);
      }
      plan.groups.push_back(std::move(group));
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace entstd
