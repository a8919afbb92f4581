#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entstd/errors.hpp"

namespace entstd {

using Vector = std::vector<double>;

enum class Metric { cosine, euclidean, squared_euclidean };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::cosine: return "cosine";
    case Metric::euclidean: return "euclidean";
    case Metric::squared_euclidean: return "sqeuclidean";
  }
  return "unknown";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  if (s == "sqeuclidean" || s == "squared-euclidean" || s == "squared_euclidean")
    return Metric::squared_euclidean;
  throw InvalidArgument("unknown metric: " + std::string(s));
}

template <class T>
double squared_norm(std::span<const T> v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return s;
}

template <class T, class U>
double dot(std::span<const T> u, std::span<const U> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  return s;
}

// Cosine distance from a precomputed dot product and norms. Shared by the
// generic path and the index scan so both produce bit-identical values.
inline double cosine_from_parts(double uv, double norm_u, double norm_v) {
  return 1.0 - uv / (norm_u * norm_v);
}

// cosine: 1 - u.v/(|u||v|) in [0, 2]; euclidean: |u - v|;
// squared-euclidean: |u - v|^2. Mixed element types are widened to double.
template <class T, class U>
double distance(Metric metric, std::span<const T> u, std::span<const U> v) {
  if (u.size() != v.size())
    throw InvalidArgument("dimension mismatch: " + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()));
  if (metric == Metric::cosine) {
    const double nu = std::sqrt(squared_norm(u));
    const double nv = std::sqrt(squared_norm(v));
    if (nu == 0.0 || nv == 0.0) throw InvalidArgument("zero vector under cosine distance");
    return cosine_from_parts(dot(u, v), nu, nv);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = static_cast<double>(u[i]) - static_cast<double>(v[i]);
    s += d * d;
  }
  return metric == Metric::euclidean ? std::sqrt(s) : s;
}

inline double distance(Metric metric, const Vector& u, const Vector& v) {
  return distance(metric, std::span<const double>(u), std::span<const double>(v));
}

// Partial derivatives of distance(u, v) w.r.t. u and v, accumulated with
// weight `scale` into du and dv. Euclidean at u == v uses the zero
// subgradient.
inline void accumulate_distance_gradient(Metric metric, std::span<const double> u,
                                         std::span<const double> v, double scale,
                                         std::span<double> du, std::span<double> dv) {
  const std::size_t n = u.size();
  switch (metric) {
    case Metric::squared_euclidean:
      for (std::size_t i = 0; i < n; ++i) {
        const double g = 2.0 * (u[i] - v[i]) * scale;
        du[i] += g;
        dv[i] -= g;
      }
      return;
    case Metric::euclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
      const double d = std::sqrt(s);
      if (d == 0.0) return;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = (u[i] - v[i]) / d * scale;
        du[i] += g;
        dv[i] -= g;
      }
      return;
    }
    case Metric::cosine: {
      const double uu = squared_norm(u);
      const double vv = squared_norm(v);
      const double uv = dot(u, v);
      const double nu = std::sqrt(uu);
      const double nv = std::sqrt(vv);
      if (nu == 0.0 || nv == 0.0) throw InvalidArgument("zero vector under cosine distance");
      const double inv = 1.0 / (nu * nv);
      const double cos = uv * inv;
      // d = 1 - cos; dcos/du = v/(|u||v|) - cos * u/|u|^2
      for (std::size_t i = 0; i < n; ++i) {
        du[i] -= scale * (v[i] * inv - cos * u[i] / uu);
        dv[i] -= scale * (u[i] * inv - cos * v[i] / vv);
      }
      return;
    }
  }
}

}  // namespace entstd
