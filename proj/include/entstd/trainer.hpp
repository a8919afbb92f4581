#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "entstd/corpus.hpp"
#include "entstd/encoder.hpp"
#include "entstd/eval.hpp"
#include "entstd/gradients.hpp"
#include "entstd/index.hpp"
#include "entstd/mining.hpp"
#include "entstd/optimizer.hpp"

namespace entstd {

struct TrainConfig {
  double margin = 2.0;
  double learning_rate = 1e-3;
  std::size_t group_size = 10;
  std::size_t groups_per_batch = 16;
  std::size_t epochs = 100;
  Strategy strategy = Strategy::hybrid;
  // Last batch-all epoch under hybrid; unset means epochs / 2.
  std::optional<std::size_t> switch_epoch;
  Metric metric = Metric::cosine;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  // Entity canonical names (and KB mentions) join the training samples of
  // their class.
  bool include_canonical_names = true;

  MiningStrategy mining() const {
    return {strategy, switch_epoch.value_or(epochs / 2)};
  }

  LossConfig loss_config(std::size_t epoch) const {
    return {margin, metric, mining().at_epoch(epoch)};
  }

  void validate() const {
    if (!(margin >= 0.0) || !std::isfinite(margin)) throw InvalidArgument("margin must be >= 0");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw InvalidArgument("learning rate must be >= 0");
    if (group_size < 2 || groups_per_batch < 2)
      throw InvalidArgument("group size and groups per batch must be >= 2");
    if (strategy == Strategy::hybrid && switch_epoch &&
        (*switch_epoch == 0 || *switch_epoch >= epochs))
      throw InvalidArgument("hybrid switch epoch must lie in [1, epochs)");
  }
};

struct EpochRecord {
  std::size_t epoch;
  Strategy strategy;
  double mean_loss;
  CategoryCounts counts;
  std::size_t batches;
  std::optional<double> validation_top1;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
};

struct TrainResult {
  EncoderParams params;
  TrainHistory history;
};

// Optional per-epoch hook returning a validation top-1 accuracy.
using EpochValidator = std::function<std::optional<double>(std::size_t epoch, const EncoderParams&)>;

inline std::vector<MentionRecord> training_samples(const Corpus& corpus, bool include_names) {
  std::vector<MentionRecord> samples;
  if (include_names)
    for (const auto& e : corpus.entities) {
      samples.push_back({e.canonical_name, e.id});
      for (const auto& m : e.kb_mentions) samples.push_back({m, e.id});
    }
  samples.insert(samples.end(), corpus.train.begin(), corpus.train.end());
  return samples;
}

// One optimizer step per sampled batch; the mining strategy in force is
// resolved per epoch. Deterministic for a fixed (corpus, cfg, init).
inline TrainResult train(const Corpus& corpus, const TrainConfig& cfg, EncoderParams init,
                         const EpochValidator& validator = {}) {
  cfg.validate();
  init.validate();
  TrainResult result{std::move(init), {}};
  if (cfg.epochs == 0) return result;

  auto& params = result.params;
  const auto samples = training_samples(corpus, cfg.include_canonical_names);
  std::vector<SparseVector> features;
  features.reserve(samples.size());
  for (const auto& s : samples) features.push_back(featurize(params, s.surface));

  Optimizer optimizer(cfg.optimizer, params);
  Gradients grads = Gradients::like(params);
  std::vector<std::size_t> members, labels;
  std::vector<SparseVector> batch;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const LossConfig loss_cfg = cfg.loss_config(epoch);
    std::vector<BatchPlan> plans;
    try {
      plans = sample_batches(samples, cfg.group_size, cfg.groups_per_batch, cfg.seed, epoch);
    } catch (const MiningError& e) {
      throw MiningError("epoch " + std::to_string(epoch) + ": " + e.what());
    }

    EpochRecord record{epoch, loss_cfg.strategy, 0.0, {}, plans.size(), std::nullopt};
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < plans.size(); ++bi) {
      plans[bi].flatten(members, labels);
      batch.clear();
      for (std::size_t m : members) batch.push_back(features[m]);
      LossResult r;
      try {
        r = loss_and_gradients(params, std::span<const SparseVector>(batch), labels, loss_cfg, grads);
      } catch (const InvalidArgument& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + " batch " + std::to_string(bi) +
                            ": " + e.what());
      }
      if (!std::isfinite(r.loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(bi));
      loss_sum += r.loss;
      record.counts += r.counts;
      optimizer.step(params, grads, cfg.learning_rate);
    }
    record.mean_loss = plans.empty() ? 0.0 : loss_sum / static_cast<double>(plans.size());
    if (validator) record.validation_top1 = validator(epoch, params);
    result.history.records.push_back(record);
  }
  return result;
}

inline nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j = {{"epoch", r.epoch},
                      {"strategy", to_string(r.strategy)},
                      {"mean_loss", r.mean_loss},
                      {"batches", r.batches},
                      {"hard", r.counts.hard},
                      {"semihard", r.counts.semihard},
                      {"easy", r.counts.easy}};
  j["validation_top1"] = r.validation_top1 ? nlohmann::json(*r.validation_top1) : nlohmann::json();
  return j;
}

// One epoch per line.
inline void write_history(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : history.records) out << to_json(r).dump() << '\n';
}

struct CrossValidationReport {
  std::vector<double> fold_top1;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation across folds
  std::vector<std::string> warnings;
};

// Stratified by entity: each class with >= k mentions is shuffled and dealt
// round-robin across folds; smaller classes go whole into one fold.
inline std::vector<std::vector<MentionRecord>> stratified_folds(
    const std::vector<MentionRecord>& mentions, std::size_t k, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr) {
  if (k < 2) throw InvalidArgument("cross-validation needs k >= 2");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    auto [it, inserted] = by_class.try_emplace(mentions[i].entity_id);
    if (inserted) order.push_back(mentions[i].entity_id);
    it->second.push_back(i);
  }
  auto rng = make_rng(seed, rng_stream::kFolds);
  std::vector<std::vector<std::size_t>> fold_idx(k);
  std::size_t next = 0;
  for (const auto& id : order) {
    auto members = by_class[id];
    std::shuffle(members.begin(), members.end(), rng);
    if (members.size() < k) {
      if (warnings)
        warnings->push_back("entity " + id + " has " + std::to_string(members.size()) +
                            " mentions, fewer than " + std::to_string(k) +
                            " folds; kept whole in one fold");
      auto& fold = fold_idx[next % k];
      fold.insert(fold.end(), members.begin(), members.end());
      next = (next + 1) % k;
      continue;
    }
    for (std::size_t j = 0; j < members.size(); ++j) fold_idx[(next + j) % k].push_back(members[j]);
    next = (next + members.size()) % k;
  }
  std::vector<std::vector<MentionRecord>> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(fold_idx[f].begin(), fold_idx[f].end());
    for (std::size_t i : fold_idx[f]) folds[f].push_back(mentions[i]);
  }
  return folds;
}

// k-fold cross-validation over the train split: train on k - 1 folds, then
// top-1 accuracy on the held-out fold against a canonical-name index.
inline CrossValidationReport cross_validate(const Corpus& corpus, const TrainConfig& cfg,
                                            std::size_t k, const EncoderParams& init) {
  CrossValidationReport report;
  const auto folds = stratified_folds(corpus.train, k, cfg.seed, &report.warnings);
  for (std::size_t f = 0; f < k; ++f) {
    if (folds[f].empty()) throw InvalidArgument("fold " + std::to_string(f) + " is empty");
    Corpus fold_corpus{corpus.entities, {}, {}};
    for (std::size_t o = 0; o < k; ++o)
      if (o != f) fold_corpus.train.insert(fold_corpus.train.end(), folds[o].begin(), folds[o].end());
    const auto trained = train(fold_corpus, cfg, init);
    const NgramEncoder encoder(trained.params);
    const auto index = build_index(encoder, fold_corpus, IndexMode::canonical_names, cfg.metric);
    report.fold_top1.push_back(topk_accuracy(index, encoder, folds[f], {1}).accuracy(1));
  }
  double sum = 0.0;
  for (double a : report.fold_top1) sum += a;
  report.mean = sum / static_cast<double>(k);
  double var = 0.0;
  for (double a : report.fold_top1) var += (a - report.mean) * (a - report.mean);
  report.stddev = std::sqrt(var / static_cast<double>(k));
  return report;
}

}  // namespace entstd
