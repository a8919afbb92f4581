// entstd: command-line driver for corpus synthesis, training, indexing,
// retrieval, evaluation and the TF-IDF baseline.
//
// Every option lives on the top-level app so a single key=value config file
// (--config) can set any of them; subcommands only pick the action.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"

#include "entstd/entstd.hpp"
#include "entstd/provider.hpp"

namespace fs = std::filesystem;
using namespace entstd;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

// Raised for option combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  // data
  std::string data_dir;
  std::string kb, train, test;
  std::string out = ".";
  // training
  std::uint64_t seed = 7;
  double margin = 2.0;
  double lr = 1e-3;
  std::size_t group_size = 10;
  std::size_t groups_per_batch = 16;
  std::size_t epochs = 100;
  std::string strategy = "hybrid";
  std::optional<std::size_t> switch_epoch;
  std::string metric = "cosine";
  std::string optimizer = "adam";
  bool include_names = true;
  bool track_validation = false;
  // encoder shape
  std::size_t feature_dim = 16384;
  std::size_t out_dim = 128;
  int ngram_lo = 2;
  int ngram_hi = 4;
  double init_scale = 1.0;
  // index / retrieval
  std::string index_mode = "canonical";
  std::size_t topk = 5;
  std::string model;
  std::string index;
  std::string encoder = "model";
  std::vector<std::string> surfaces;
  // eval extras
  std::string negatives;
  std::size_t thresholds = 201;
  std::string tpr_rule = "top1";
  std::size_t repeats = 10;
  std::size_t folds = 5;
  // synthesis
  std::size_t entities = 30;
  std::size_t mentions_per_entity = 10;
  std::size_t n_negatives = 60;
  // provider
  std::string provider_endpoint;
  std::size_t provider_batch = 64;
  std::string provider_cache;
};

CorpusPaths corpus_paths(const Options& o) {
  CorpusPaths p;
  if (!o.data_dir.empty()) p = CorpusPaths::in_directory(o.data_dir);
  if (!o.kb.empty()) p.kb = o.kb;
  if (!o.train.empty()) p.train = o.train;
  if (!o.test.empty()) p.test = o.test;
  if (p.kb.empty() || p.train.empty() || p.test.empty())
    throw UsageError("dataset required: --data DIR or --kb/--train/--test");
  return p;
}

Corpus load_data(const Options& o) {
  const auto p = corpus_paths(o);
  return load_corpus(p.kb, p.train, p.test);
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg;
  cfg.margin = o.margin;
  cfg.learning_rate = o.lr;
  cfg.group_size = o.group_size;
  cfg.groups_per_batch = o.groups_per_batch;
  cfg.epochs = o.epochs;
  cfg.strategy = parse_strategy(o.strategy);
  cfg.switch_epoch = o.switch_epoch;
  cfg.metric = parse_metric(o.metric);
  cfg.seed = o.seed;
  cfg.optimizer.kind = parse_optimizer(o.optimizer);
  cfg.include_canonical_names = o.include_names;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

EncoderParams initial_params(const Options& o) {
  return EncoderParams::random(o.feature_dim, {o.ngram_lo, o.ngram_hi}, o.out_dim, o.seed,
                               o.init_scale);
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

void echo_config(const CLI::App& app, const fs::path& dir) {
  std::ofstream out(dir / "config.ini", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "config.ini").string());
  out << app.config_to_str(true, false);
}

// Owns whichever encoder the options select.
struct LoadedEncoder {
  std::variant<EncoderParams, TfidfModel> model;
  std::optional<ProviderEncoder> provider;

  template <class F>
  decltype(auto) visit(F&& f) const {
    if (provider) return f(*provider);
    if (const auto* p = std::get_if<EncoderParams>(&model)) return f(NgramEncoder(*p));
    return f(TfidfEncoder(std::get<TfidfModel>(model)));
  }
};

LoadedEncoder load_encoder_for(const Options& o) {
  LoadedEncoder enc;
  if (o.encoder == "provider") {
    if (o.provider_endpoint.empty()) throw UsageError("--encoder provider needs --provider-endpoint");
    ProviderConfig pc;
    pc.endpoint = o.provider_endpoint;
    if (const char* token = std::getenv(kProviderTokenEnv)) pc.token = token;
    pc.batch_limit = o.provider_batch;
    pc.cache_path = o.provider_cache.empty() ? fs::path() : fs::path(o.provider_cache);
    enc.provider.emplace(std::move(pc));
    return enc;
  }
  if (o.model.empty()) throw UsageError("--model is required");
  if (peek_model_kind(o.model) == ModelKind::tfidf)
    enc.model = load_tfidf(o.model);
  else
    enc.model = load_encoder(o.model);
  return enc;
}

EmbeddingIndex require_index(const Options& o) {
  if (o.index.empty()) throw UsageError("--index is required");
  return load_index(o.index);
}

std::vector<std::size_t> report_ks(const Options& o) {
  std::vector<std::size_t> ks = {1, 3, 5};
  if (o.topk != 1 && o.topk != 3 && o.topk != 5) ks.push_back(o.topk);
  return ks;
}

void print_topk(const EvalReport& report) {
  for (const auto& [k, acc] : report.top_k) std::printf("T@%zu %.4f\n", k, acc);
  std::printf("n_test %zu\n", report.n_test);
}

int cmd_synth(const Options& o, const CLI::App& app) {
  SynthesisConfig sc;
  sc.n_entities = o.entities;
  sc.mentions_per_entity = o.mentions_per_entity;
  sc.seed = o.seed;
  const auto corpus = synthesize_corpus(sc);
  const auto dir = out_dir(o);
  const auto paths = CorpusPaths::in_directory(dir);
  save_corpus(corpus, paths.kb, paths.train, paths.test);
  std::ofstream neg(dir / "negatives.txt", std::ios::binary);
  for (const auto& n : synthesize_negatives(sc, corpus, o.n_negatives)) neg << n << '\n';
  echo_config(app, dir);
  std::printf("entities %zu train %zu test %zu negatives %zu\n", corpus.entities.size(),
              corpus.train.size(), corpus.test.size(), o.n_negatives);
  return kOk;
}

int cmd_train(const Options& o, const CLI::App& app) {
  const auto corpus = load_data(o);
  const auto cfg = train_config(o);
  EpochValidator validator;
  if (o.track_validation && !corpus.test.empty())
    validator = [&](std::size_t, const EncoderParams& p) -> std::optional<double> {
      const NgramEncoder enc(p);
      const auto idx = build_index(enc, corpus, parse_index_mode(o.index_mode), cfg.metric);
      return topk_accuracy(idx, enc, corpus.test, {1}).accuracy(1);
    };
  const auto result = train(corpus, cfg, initial_params(o), validator);
  const auto dir = out_dir(o);
  save_encoder(result.params, dir / "model.bin");
  write_history(result.history, dir / "history.jsonl");
  echo_config(app, dir);
  if (!result.history.records.empty()) {
    const auto& first = result.history.records.front();
    const auto& last = result.history.records.back();
    std::printf("epochs %zu mean loss %.6f -> %.6f\n", result.history.records.size(), first.mean_loss,
                last.mean_loss);
  }
  return kOk;
}

int cmd_index(const Options& o, const CLI::App& app) {
  const auto corpus = load_data(o);
  const auto enc = load_encoder_for(o);
  const auto index = enc.visit([&](const auto& e) {
    return build_index(e, corpus, parse_index_mode(o.index_mode), parse_metric(o.metric));
  });
  const auto dir = out_dir(o);
  save_index(index, dir / "index.bin");
  echo_config(app, dir);
  std::printf("rows %zu entities %zu dim %zu\n", index.row_count(), index.entity_count(), index.dim());
  return kOk;
}

int cmd_query(const Options& o) {
  const auto index = require_index(o);
  const auto enc = load_encoder_for(o);
  std::vector<std::string> surfaces;
  for (const auto& s : o.surfaces)
    if (!canonicalize(s).empty()) surfaces.push_back(s);
  if (o.surfaces.empty())
    for (std::string line; std::getline(std::cin, line);)
      if (!canonicalize(line).empty()) surfaces.push_back(line);
  const auto hits = enc.visit([&](const auto& e) { return retrieve(index, e, surfaces, o.topk); });
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    std::printf("%s", canonicalize(surfaces[i]).c_str());
    for (const auto& h : hits[i]) std::printf("\t%s %.9g", h.entity_id.c_str(), h.distance);
    std::printf("\n");
  }
  return kOk;
}

int cmd_eval(const Options& o, const CLI::App& app) {
  const auto corpus = load_data(o);
  const auto index = require_index(o);
  const auto enc = load_encoder_for(o);
  const auto report =
      enc.visit([&](const auto& e) { return topk_accuracy(index, e, corpus.test, report_ks(o)); });
  const auto dir = out_dir(o);
  write_eval_report(report, dir / "eval.jsonl");
  echo_config(app, dir);
  print_topk(report);
  return kOk;
}

std::vector<std::string> read_lines(const fs::path& path) {
  if (!fs::exists(path)) throw MissingFileError(path.string());
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!canonicalize(line).empty()) lines.push_back(canonicalize(line));
  return lines;
}

int cmd_roc(const Options& o, const CLI::App& app) {
  if (o.negatives.empty()) throw UsageError("--negatives FILE is required");
  const auto corpus = load_data(o);
  const auto negatives = read_lines(o.negatives);
  if (negatives.empty()) throw DataError(o.negatives + ": no negative mentions");
  const auto index = require_index(o);
  const auto enc = load_encoder_for(o);
  const TprRule rule = o.tpr_rule == "accepted" ? TprRule::accepted : TprRule::top1_correct;
  const auto report = enc.visit([&](const auto& e) {
    return roc_curve(index, e, corpus.test, negatives, o.thresholds, rule);
  });
  const auto dir = out_dir(o);
  write_roc_report(report, dir / "roc.jsonl");
  write_roc_table(report, dir / "roc.tsv");
  echo_config(app, dir);
  std::printf("auc %.6f points %zu\n", report.auc, report.points.size());
  return kOk;
}

int cmd_bench(const Options& o) {
  const auto corpus = load_data(o);
  const auto index = require_index(o);
  const auto enc = load_encoder_for(o);
  const auto result =
      enc.visit([&](const auto& e) { return benchmark_inference(index, e, corpus.test, o.repeats); });
  std::printf("median_seconds %.6f\n", result.median_seconds);
  for (std::size_t i = 0; i < result.run_seconds.size(); ++i)
    std::printf("run %zu %.6f\n", i + 1, result.run_seconds[i]);
  return kOk;
}

int cmd_cv(const Options& o) {
  const auto corpus = load_data(o);
  const auto report = cross_validate(corpus, train_config(o), o.folds, initial_params(o));
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (std::size_t f = 0; f < report.fold_top1.size(); ++f)
    std::printf("fold %zu T@1 %.4f\n", f + 1, report.fold_top1[f]);
  std::printf("mean %.4f stddev %.4f\n", report.mean, report.stddev);
  return kOk;
}

int cmd_baseline(const Options& o, const CLI::App& app) {
  const auto corpus = load_data(o);
  TfidfConfig tc;
  tc.chars = {o.ngram_lo, o.ngram_hi};
  const auto docs = tfidf_documents(corpus);
  const auto model = fit_tfidf(docs, tc);
  const TfidfEncoder enc(model);
  const auto index = build_index(enc, corpus, parse_index_mode(o.index_mode), parse_metric(o.metric));
  const auto dir = out_dir(o);
  save_tfidf(model, dir / "tfidf.bin");
  save_index(index, dir / "index.bin");
  echo_config(app, dir);
  std::printf("vocabulary %zu\n", model.dim());
  if (corpus.test.empty()) return kOk;
  const auto report = topk_accuracy(index, enc, corpus.test, report_ks(o));
  write_eval_report(report, dir / "eval.jsonl");
  print_topk(report);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity standardization with triplet-trained text embeddings"};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "Key=value config file; flags override its values");
  app.require_subcommand(1);
  Options o;

  app.add_option("--data", o.data_dir, "Dataset directory holding kb.jsonl, train.jsonl, test.jsonl");
  app.add_option("--kb", o.kb, "Knowledge-base file (overrides --data)");
  app.add_option("--train", o.train, "Train split file (overrides --data)");
  app.add_option("--test", o.test, "Test split file (overrides --data)");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--margin", o.margin, "Triplet margin")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--lr", o.lr, "Learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--group-size", o.group_size, "Samples per contrastive group")->capture_default_str();
  app.add_option("--groups-per-batch", o.groups_per_batch, "Groups per batch")->capture_default_str();
  app.add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  app.add_option("--strategy", o.strategy, "Mining strategy")
      ->capture_default_str()
      ->check(CLI::IsMember({"batch-all", "batch-hard", "hybrid"}));
  app.add_option("--switch-epoch", o.switch_epoch, "Last batch-all epoch under hybrid (default epochs/2)");
  app.add_option("--metric", o.metric, "Distance metric")
      ->capture_default_str()
      ->check(CLI::IsMember({"cosine", "euclidean", "sqeuclidean"}));
  app.add_option("--optimizer", o.optimizer, "Optimizer")
      ->capture_default_str()
      ->check(CLI::IsMember({"adam", "sgd"}));
  app.add_option("--include-names", o.include_names, "Train on canonical names and KB mentions too")
      ->capture_default_str();
  app.add_flag("--track-validation", o.track_validation, "Record test T@1 after every epoch");
  app.add_option("--feature-dim", o.feature_dim, "Hashed n-gram buckets")->capture_default_str();
  app.add_option("--out-dim", o.out_dim, "Embedding dimension")->capture_default_str();
  app.add_option("--ngram-lo", o.ngram_lo, "Shortest character n-gram")->capture_default_str();
  app.add_option("--ngram-hi", o.ngram_hi, "Longest character n-gram")->capture_default_str();
  app.add_option("--init-scale", o.init_scale, "Multiplier on the Xavier init range")->capture_default_str();
  app.add_option("--index-mode", o.index_mode, "Indexed surfaces")
      ->capture_default_str()
      ->check(CLI::IsMember({"canonical", "extended"}));
  app.add_option("--topk", o.topk, "Results per query; extra k for eval")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--model", o.model, "Model file (trained encoder or TF-IDF)");
  app.add_option("--index", o.index, "Index file");
  app.add_option("--encoder", o.encoder, "Encoder source")
      ->capture_default_str()
      ->check(CLI::IsMember({"model", "provider"}));
  app.add_option("--negatives", o.negatives, "Out-of-KB mentions, one per line");
  app.add_option("--thresholds", o.thresholds, "ROC grid size")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--tpr-rule", o.tpr_rule, "ROC true positive rule")
      ->capture_default_str()
      ->check(CLI::IsMember({"top1", "accepted"}));
  app.add_option("--repeats", o.repeats, "Benchmark runs")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--entities", o.entities, "Synthetic entity count")->capture_default_str();
  app.add_option("--mentions-per-entity", o.mentions_per_entity, "Synthetic mentions per entity")
      ->capture_default_str();
  app.add_option("--n-negatives", o.n_negatives, "Synthetic out-of-KB mentions")->capture_default_str();
  app.add_option("--provider-endpoint", o.provider_endpoint,
                 "Embedding provider URL; token read from ENTSTD_PROVIDER_TOKEN");
  app.add_option("--provider-batch", o.provider_batch, "Texts per provider request")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--provider-cache", o.provider_cache, "Provider embedding cache file");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus and negatives to --out");
  auto* train_cmd = app.add_subcommand("train", "Train the encoder; writes model.bin and history.jsonl");
  auto* index_cmd = app.add_subcommand("index", "Embed indexed surfaces; writes index.bin");
  auto* query_cmd = app.add_subcommand("query", "Top-k entities for mentions (arguments or stdin)");
  query_cmd->add_option("surfaces", o.surfaces, "Mentions to look up");
  auto* eval_cmd = app.add_subcommand("eval", "Top-k accuracy on the test split; writes eval.jsonl");
  auto* roc_cmd = app.add_subcommand("roc", "ROC against out-of-KB negatives; writes roc.jsonl, roc.tsv");
  auto* bench_cmd = app.add_subcommand("bench", "Median inference time over the test split");
  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation over the train split");
  auto* baseline_cmd = app.add_subcommand("baseline", "Fit and evaluate the TF-IDF baseline");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*synth) return cmd_synth(o, app);
    if (*train_cmd) return cmd_train(o, app);
    if (*index_cmd) return cmd_index(o, app);
    if (*query_cmd) return cmd_query(o);
    if (*eval_cmd) return cmd_eval(o, app);
    if (*roc_cmd) return cmd_roc(o, app);
    if (*bench_cmd) return cmd_bench(o);
    if (*cv_cmd) return cmd_cv(o);
    if (*baseline_cmd) return cmd_baseline(o, app);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const InvalidArgument& e) {
    // Inconsistent artifacts or inputs, e.g. an index built by another model.
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
