#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They share no code with the library beyond plain data types, and
// the loss oracle runs in long double so finite differences stay clean.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "entstd/encoder.hpp"
#include "entstd/features.hpp"
#include "entstd/mining.hpp"

namespace oracle {

using entstd::Metric;

template <class T>
T dist(Metric m, const std::vector<T>& u, const std::vector<T>& v) {
  T uu = 0, vv = 0, uv = 0, sq = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
    sq += (u[i] - v[i]) * (u[i] - v[i]);
  }
  switch (m) {
    case Metric::cosine: return T(1) - uv / (std::sqrt(uu) * std::sqrt(vv));
    case Metric::euclidean: return std::sqrt(sq);
    case Metric::squared_euclidean: return sq;
  }
  return T(0);
}

struct Triple {
  std::size_t a, p, n;
  bool operator==(const Triple&) const = default;
};

// Every (a, p, n) in [0, B)^3, kept when it is a valid triplet.
inline std::vector<Triple> valid_triplets(const std::vector<int>& labels) {
  std::vector<Triple> out;
  const std::size_t b = labels.size();
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t p = 0; p < b; ++p)
      for (std::size_t n = 0; n < b; ++n)
        if (a != p && labels[a] == labels[p] && labels[a] != labels[n]) out.push_back({a, p, n});
  return out;
}

enum class Cat { easy, semihard, hard };

template <class T>
Cat category(T d_ap, T d_an, T margin) {
  const T gap = d_an - d_ap;
  if (gap < 0) return Cat::hard;
  if (gap > margin) return Cat::easy;
  return Cat::semihard;
}

template <class T>
struct AllResult {
  T loss = 0;
  std::size_t hard = 0, semihard = 0, easy = 0;
};

template <class T>
AllResult<T> batch_all(const std::vector<std::vector<T>>& emb, const std::vector<int>& labels, T margin,
                       Metric m) {
  AllResult<T> r;
  T sum = 0;
  for (const auto& t : valid_triplets(labels)) {
    const T d_ap = dist(m, emb[t.a], emb[t.p]);
    const T d_an = dist(m, emb[t.a], emb[t.n]);
    switch (category(d_ap, d_an, margin)) {
      case Cat::easy: ++r.easy; continue;
      case Cat::semihard: ++r.semihard; break;
      case Cat::hard: ++r.hard; break;
    }
    sum += std::max(d_ap - d_an + margin, T(0));
  }
  const std::size_t active = r.hard + r.semihard;
  r.loss = active ? sum / static_cast<T>(active) : T(0);
  return r;
}

template <class T>
struct HardPick {
  std::size_t pos, neg;
  T d_ap, d_an;
};

template <class T>
struct HardResult {
  T loss = 0;
  std::vector<HardPick<T>> picks;
};

// Scans candidates in index order; a later candidate must be strictly
// better to replace the current pick.
template <class T>
HardResult<T> batch_hard(const std::vector<std::vector<T>>& emb, const std::vector<int>& labels, T margin,
                         Metric m) {
  HardResult<T> r;
  const std::size_t b = labels.size();
  T sum = 0;
  for (std::size_t a = 0; a < b; ++a) {
    HardPick<T> pick{b, b, T(-1), T(0)};
    for (std::size_t j = 0; j < b; ++j) {
      if (j == a) continue;
      const T d = dist(m, emb[a], emb[j]);
      if (labels[j] == labels[a]) {
        if (pick.pos == b || d > pick.d_ap) pick.pos = j, pick.d_ap = d;
      } else if (pick.neg == b || d < pick.d_an) {
        pick.neg = j, pick.d_an = d;
      }
    }
    sum += std::max(pick.d_ap - pick.d_an + margin, T(0));
    r.picks.push_back(pick);
  }
  r.loss = sum / static_cast<T>(b);
  return r;
}

// tanh(W^T f + c) in long double.
inline std::vector<long double> encode(const entstd::EncoderParams& p, const entstd::SparseVector& f) {
  std::vector<long double> y(p.out_dim);
  for (std::size_t o = 0; o < p.out_dim; ++o) {
    long double z = p.bias[o];
    for (const auto& e : f) z += static_cast<long double>(e.value) * p.weights[e.index * p.out_dim + o];
    y[o] = std::tanh(z);
  }
  return y;
}

inline long double strategy_loss(const entstd::EncoderParams& p, const std::vector<entstd::SparseVector>& feats,
                                 const std::vector<int>& labels, long double margin, Metric m,
                                 entstd::Strategy s) {
  std::vector<std::vector<long double>> emb;
  for (const auto& f : feats) emb.push_back(encode(p, f));
  return s == entstd::Strategy::batch_all ? batch_all(emb, labels, margin, m).loss
                                          : batch_hard(emb, labels, margin, m).loss;
}

// Smallest distance of the batch to a point where the loss is not
// differentiable: a hinge at zero, or a tie between hardest candidates.
inline long double kink_distance(const entstd::EncoderParams& p, const std::vector<entstd::SparseVector>& feats,
                                 const std::vector<int>& labels, long double margin, Metric m,
                                 entstd::Strategy s) {
  std::vector<std::vector<long double>> emb;
  for (const auto& f : feats) emb.push_back(encode(p, f));
  long double best = INFINITY;
  const std::size_t b = labels.size();
  if (s == entstd::Strategy::batch_all) {
    for (const auto& t : valid_triplets(labels)) {
      const long double gap = dist(m, emb[t.a], emb[t.n]) - dist(m, emb[t.a], emb[t.p]);
      best = std::min({best, std::fabs(gap - margin), std::fabs(gap)});
    }
    return best;
  }
  const auto r = batch_hard(emb, labels, margin, m);
  for (std::size_t a = 0; a < b; ++a) {
    const auto& pk = r.picks[a];
    best = std::min(best, std::fabs(pk.d_an - pk.d_ap - margin));
    for (std::size_t j = 0; j < b; ++j) {
      if (j == a) continue;
      const long double d = dist(m, emb[a], emb[j]);
      if (labels[j] == labels[a] && j != pk.pos) best = std::min(best, std::fabs(d - pk.d_ap));
      if (labels[j] != labels[a] && j != pk.neg) best = std::min(best, std::fabs(d - pk.d_an));
    }
  }
  return best;
}

struct GradCheck {
  std::size_t checked = 0;   // components with |g| above the floor
  double max_rel_error = 0.0;
};

// Central differences with step h on every weight and bias; compares against
// the analytic gradient where either magnitude exceeds `floor`.
inline GradCheck finite_difference_check(entstd::EncoderParams p, const std::vector<entstd::SparseVector>& feats,
                                         const std::vector<int>& labels, double margin, Metric m,
                                         entstd::Strategy s, const std::vector<double>& g_weights,
                                         const std::vector<double>& g_bias, double h = 1e-5,
                                         double floor = 1e-8) {
  GradCheck out;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const long double up = strategy_loss(p, feats, labels, margin, m, s);
    param = saved - h;
    const long double down = strategy_loss(p, feats, labels, margin, m, s);
    param = saved;
    const double numeric = static_cast<double>((up - down) / (2.0L * h));
    const double scale = std::max(std::fabs(analytic), std::fabs(numeric));
    if (scale <= floor) return;
    ++out.checked;
    out.max_rel_error = std::max(out.max_rel_error, std::fabs(analytic - numeric) / scale);
  };
  for (std::size_t i = 0; i < p.weights.size(); ++i) check(p.weights[i], g_weights[i]);
  for (std::size_t i = 0; i < p.bias.size(); ++i) check(p.bias[i], g_bias[i]);
  return out;
}

struct Ranked {
  std::string id;
  double distance;
};

// Full entity ranking from float rows: per-entity minimum over rows (earliest
// row wins ties), then a stable sort by distance over first-row order.
inline std::vector<Ranked> brute_force_ranking(const std::vector<std::string>& row_ids,
                                               const std::vector<std::vector<float>>& rows,
                                               const std::vector<double>& q, Metric m) {
  struct Entry {
    std::string id;
    double d;
    std::size_t row;
  };
  std::vector<Entry> entries;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> v(rows[r].begin(), rows[r].end());
    const double d = dist<double>(m, q, v);
    auto it = std::find_if(entries.begin(), entries.end(), [&](const Entry& e) { return e.id == row_ids[r]; });
    if (it == entries.end())
      entries.push_back({row_ids[r], d, r});
    else if (d < it->d)
      it->d = d, it->row = r;
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.d != b.d ? a.d < b.d : a.row < b.row;
  });
  std::vector<Ranked> out;
  for (const auto& e : entries) out.push_back({e.id, e.d});
  return out;
}

}  // namespace oracle
