#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "entstd/corpus.hpp"
#include "entstd/encoder.hpp"
#include "entstd/errors.hpp"
#include "entstd/index.hpp"

namespace entstd {

// Encoders that may emit an all-zero vector (e.g. a text with no known
// terms) declare `static constexpr ZeroQuery zero_query`; the harness then
// ranks such queries last instead of failing.
template <class E>
constexpr ZeroQuery zero_query_policy() {
  if constexpr (requires { E::zero_query; })
    return E::zero_query;
  else
    return ZeroQuery::reject;
}

struct MentionPrediction {
  std::string surface;
  std::string gold_id;
  std::vector<Hit> top;
};

struct EvalReport {
  std::map<std::size_t, double> top_k;
  std::size_t n_test = 0;
  std::vector<MentionPrediction> mentions;

  double accuracy(std::size_t k) const { return top_k.at(k); }
};

inline constexpr std::size_t kPredictionsKept = 5;

inline constexpr std::size_t kEncodeChunk = 256;

// One encoder call per text, in chunks so dense encoders with a large
// vocabulary stay bounded in memory. An encoder whose dimension is not yet
// known reports dim() == 0; its vectors are checked by the index instead.
template <TextEncoder E>
std::vector<std::vector<Hit>> retrieve(const EmbeddingIndex& index, const E& encoder,
                                       std::span<const std::string> surfaces, std::size_t k) {
  const std::size_t dim = encoder.dim();
  if (dim != 0 && dim != index.dim())
    throw InvalidArgument("encoder dimension " + std::to_string(dim) +
                          " != index dimension " + std::to_string(index.dim()));
  std::vector<std::vector<Hit>> out;
  out.reserve(surfaces.size());
  for (std::size_t start = 0; start < surfaces.size(); start += kEncodeChunk) {
    const auto chunk = surfaces.subspan(start, std::min(kEncodeChunk, surfaces.size() - start));
    const auto vectors = encoder.encode_batch(chunk);
    if (vectors.size() != chunk.size()) throw Error("encoder returned a short batch");
    for (const auto& v : vectors) out.push_back(index.query(v, k, zero_query_policy<E>()));
  }
  return out;
}

// Accuracy@k = share of mentions whose gold entity is among the first k
// ranked entities. Per-mention top-5 lists are kept for error analysis.
template <TextEncoder E>
EvalReport topk_accuracy(const EmbeddingIndex& index, const E& encoder,
                         std::span<const MentionRecord> test,
                         std::vector<std::size_t> ks = {1, 3, 5}) {
  if (test.empty()) throw InvalidArgument("top-k accuracy is undefined on an empty test set");
  if (ks.empty()) throw InvalidArgument("no k requested");
  std::sort(ks.begin(), ks.end());
  if (ks.front() == 0) throw InvalidArgument("k must be positive");
  const std::size_t depth = std::max(ks.back(), kPredictionsKept);

  std::vector<std::string> surfaces;
  surfaces.reserve(test.size());
  for (const auto& m : test) surfaces.push_back(m.surface);
  auto results = retrieve(index, encoder, surfaces, depth);

  EvalReport report;
  report.n_test = test.size();
  std::map<std::size_t, std::size_t> hits;
  for (std::size_t k : ks) hits[k] = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& ranked = results[i];
    std::size_t rank = ranked.size();
    for (std::size_t r = 0; r < ranked.size(); ++r)
      if (ranked[r].entity_id == test[i].entity_id) {
        rank = r;
        break;
      }
    for (std::size_t k : ks)
      if (rank < k) ++hits[k];
    if (ranked.size() > kPredictionsKept) ranked.resize(kPredictionsKept);
    report.mentions.push_back({test[i].surface, test[i].entity_id, std::move(ranked)});
  }
  for (const auto& [k, h] : hits)
    report.top_k[k] = static_cast<double>(h) / static_cast<double>(test.size());
  return report;
}

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocReport {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// What counts as a true positive at a threshold.
enum class TprRule {
  top1_correct,  // accepted and the top-1 entity is the gold one
  accepted,      // accepted, regardless of the retrieved entity
};

struct ScoredMention {
  double score;  // distance to the nearest indexed entity
  bool correct;  // top-1 entity equals the gold entity
};

// A mention is accepted at threshold t iff score <= t.
inline RocPoint roc_point(std::span<const ScoredMention> positives, std::span<const double> negatives,
                          double threshold, TprRule rule = TprRule::top1_correct) {
  std::size_t tp = 0, fp = 0;
  for (const auto& p : positives)
    if (p.score <= threshold && (rule == TprRule::accepted || p.correct)) ++tp;
  for (double s : negatives)
    if (s <= threshold) ++fp;
  return {threshold, static_cast<double>(fp) / static_cast<double>(negatives.size()),
          static_cast<double>(tp) / static_cast<double>(positives.size())};
}

// Points at n_thresholds evenly spaced thresholds over the observed score
// range. The AUC integrates (trapezoid rule) the full-resolution curve, i.e.
// one vertex per distinct observed score plus the origin, so it does not
// depend on the grid density.
inline RocReport roc_from_scores(std::span<const ScoredMention> positives,
                                 std::span<const double> negatives, std::size_t n_thresholds = 201,
                                 TprRule rule = TprRule::top1_correct) {
  if (positives.empty() || negatives.empty())
    throw InvalidArgument("ROC needs non-empty positive and negative sets");
  if (n_thresholds == 0) throw InvalidArgument("n_thresholds must be positive");

  std::vector<double> scores;
  for (const auto& p : positives) scores.push_back(p.score);
  scores.insert(scores.end(), negatives.begin(), negatives.end());
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  const double lo = scores.front();
  const double hi = scores.back();

  RocReport report;
  for (std::size_t i = 0; i < n_thresholds; ++i) {
    double t = hi;
    if (n_thresholds > 1 && i + 1 < n_thresholds)
      t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_thresholds - 1);
    report.points.push_back(roc_point(positives, negatives, t, rule));
  }

  // Sweep the distinct scores in ascending order.
  struct Event {
    double score;
    bool negative;
    bool counts;
  };
  std::vector<Event> events;
  for (const auto& p : positives)
    events.push_back({p.score, false, rule == TprRule::accepted || p.correct});
  for (double s : negatives) events.push_back({s, true, true});
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.score < b.score; });

  // Twice the area in units of (1/|neg|) x (1/|pos|); exact integer sum.
  std::uint64_t tp = 0, fp = 0, twice_area = 0;
  for (std::size_t i = 0; i < events.size();) {
    const double s = events[i].score;
    const std::uint64_t tp_before = tp, fp_before = fp;
    for (; i < events.size() && events[i].score == s; ++i) {
      if (events[i].negative)
        ++fp;
      else if (events[i].counts)
        ++tp;
    }
    twice_area += (fp - fp_before) * (tp + tp_before);
  }
  const double area = static_cast<double>(twice_area) /
                      (2.0 * static_cast<double>(positives.size()) * static_cast<double>(negatives.size()));
  report.auc = area;
  return report;
}

// Scores positives (gold-labelled test mentions) and negatives (surfaces
// that refer to no indexed entity) by their nearest-entity distance.
template <TextEncoder E>
RocReport roc_curve(const EmbeddingIndex& index, const E& encoder,
                    std::span<const MentionRecord> positives,
                    std::span<const std::string> negatives, std::size_t n_thresholds = 201,
                    TprRule rule = TprRule::top1_correct) {
  if (positives.empty() || negatives.empty())
    throw InvalidArgument("ROC needs non-empty positive and negative sets");
  std::vector<std::string> surfaces;
  for (const auto& m : positives) surfaces.push_back(m.surface);
  const auto pos_hits = retrieve(index, encoder, surfaces, 1);
  const auto neg_hits = retrieve(index, encoder, negatives, 1);

  std::vector<ScoredMention> pos;
  for (std::size_t i = 0; i < positives.size(); ++i)
    pos.push_back({pos_hits[i].front().distance, pos_hits[i].front().entity_id == positives[i].entity_id});
  std::vector<double> neg;
  for (const auto& h : neg_hits) neg.push_back(h.front().distance);
  return roc_from_scores(pos, neg, n_thresholds, rule);
}

struct BenchmarkResult {
  double median_seconds = 0.0;
  std::vector<double> run_seconds;
};

inline double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : (values[m - 1] + values[m]) / 2.0;
}

// Wall time of encode + top-5 query over the whole test set, per run.
template <TextEncoder E>
BenchmarkResult benchmark_inference(const EmbeddingIndex& index, const E& encoder,
                                    std::span<const MentionRecord> test, std::size_t repeats = 10) {
  if (repeats == 0) throw InvalidArgument("repeats must be >= 1");
  std::vector<std::string> surfaces;
  for (const auto& m : test) surfaces.push_back(m.surface);
  BenchmarkResult result;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const auto hits = retrieve(index, encoder, surfaces, kPredictionsKept);
    const auto stop = std::chrono::steady_clock::now();
    if (hits.size() != surfaces.size()) throw Error("benchmark lost results");
    result.run_seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  result.median_seconds = median(result.run_seconds);
  return result;
}

inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json top = nlohmann::json::object();
  for (const auto& [k, acc] : report.top_k) top[std::to_string(k)] = acc;
  return {{"n_test", report.n_test}, {"top_k", top}};
}

// First line: summary; then one line per test mention.
inline void write_eval_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(report).dump() << '\n';
  for (const auto& m : report.mentions) {
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& h : m.top) preds.push_back({{"id", h.entity_id}, {"distance", h.distance}});
    out << nlohmann::json{{"surface", m.surface}, {"gold", m.gold_id}, {"predictions", preds}}.dump()
        << '\n';
  }
}

inline void write_roc_report(const RocReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << nlohmann::json{{"auc", report.auc}, {"points", report.points.size()}}.dump() << '\n';
  for (const auto& p : report.points)
    out << nlohmann::json{{"threshold", p.threshold}, {"fpr", p.fpr}, {"tpr", p.tpr}}.dump() << '\n';
}

// Two whitespace-separated columns (fpr tpr), one point per line.
inline void write_roc_table(const RocReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# fpr tpr\n";
  char line[64];
  for (const auto& p : report.points) {
    std::snprintf(line, sizeof line, "%.9g %.9g\n", p.fpr, p.tpr);
    out << line;
  }
}

}  // namespace entstd
