#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <string>
#include <vector>

#include "entstd/checkpoint.hpp"
#include "entstd/eval.hpp"
#include "entstd/index.hpp"
#include "entstd/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace entstd;

namespace {

EmbeddingIndex toy_index(Metric metric = Metric::euclidean) {
  const std::vector<Vector> rows = {{0.9}, {0.1}};
  const std::vector<std::string> ids = {"A", "B"};
  return build_index(rows, ids, metric, IndexMode::canonical_names);
}

// Wraps an encoder and counts the texts it is asked to encode.
struct CountingEncoder {
  NgramEncoder inner;
  mutable std::size_t texts = 0;
  mutable std::size_t calls = 0;

  std::vector<Vector> encode_batch(std::span<const std::string> batch) const {
    texts += batch.size();
    ++calls;
    return inner.encode_batch(batch);
  }
  std::size_t dim() const { return inner.dim(); }
};

}  // namespace

TEST(Index, ToyQueryRanksByDistance) {
  const auto index = toy_index();
  const std::vector<double> q = {0.0};
  const auto hits = index.query(q, 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].entity_id, "B");
  EXPECT_NEAR(hits[0].distance, 0.1, 1e-7);
  EXPECT_EQ(hits[1].entity_id, "A");
  EXPECT_NEAR(hits[1].distance, 0.9, 1e-7);
  EXPECT_EQ(index.query(q, 1).size(), 1u);
  EXPECT_TRUE(index.query(q, 0).empty());
}

TEST(Index, KLargerThanEntityCountReturnsAll) {
  const auto index = toy_index();
  const std::vector<double> q = {0.5};
  EXPECT_EQ(index.query(q, 50).size(), 2u);
}

TEST(Index, EntityDistanceIsMinimumOverItsRows) {
  const std::vector<Vector> rows = {{3.0}, {1.0}, {0.5}, {2.0}};
  const std::vector<std::string> ids = {"A", "B", "A", "C"};
  const auto index = build_index(rows, ids, Metric::euclidean, IndexMode::names_plus_train);
  EXPECT_EQ(index.entity_count(), 3u);
  EXPECT_EQ(index.row_count(), 4u);
  const std::vector<double> q = {0.0};
  const auto hits = index.query(q, 3);
  EXPECT_EQ(hits, (std::vector<Hit>{{"A", 0.5}, {"B", 1.0}, {"C", 2.0}}));
}

TEST(Index, TiesGoToEarlierRow) {
  const std::vector<Vector> rows = {{1.0}, {-1.0}, {1.0}};
  const std::vector<std::string> ids = {"X", "Y", "Z"};
  const auto index = build_index(rows, ids, Metric::euclidean, IndexMode::canonical_names);
  const std::vector<double> q = {0.0};
  const auto hits = index.query(q, 3);
  EXPECT_EQ(hits[0].entity_id, "X");
  EXPECT_EQ(hits[1].entity_id, "Y");
  EXPECT_EQ(hits[2].entity_id, "Z");
}

TEST(Index, SelfQueryOfCanonicalNameIsDistanceZero) {
  const auto corpus = synthesize_corpus({});
  const auto params = EncoderParams::random(2048, {2, 4}, 32, 3);
  const NgramEncoder enc(params);
  const auto index = build_index(enc, corpus, IndexMode::canonical_names, Metric::cosine);
  for (const auto& e : corpus.entities) {
    const auto v = encode(params, e.canonical_name);
    const auto hits = index.query(v, 1);
    EXPECT_EQ(hits[0].entity_id, e.id);
    EXPECT_NEAR(hits[0].distance, 0.0, 1e-6);
  }
}

TEST(Index, ExtendedModeAddsTrainMentions) {
  const auto corpus = synthesize_corpus({});
  const auto params = EncoderParams::random(2048, {2, 4}, 32, 3);
  const NgramEncoder enc(params);
  const auto ext = build_index(enc, corpus, IndexMode::names_plus_train, Metric::cosine);
  EXPECT_EQ(ext.row_count(), corpus.entities.size() + corpus.train.size());
  EXPECT_EQ(ext.entity_count(), corpus.entities.size());
  const auto& m = corpus.train.front();
  const auto hits = ext.query(encode(params, m.surface), 1);
  EXPECT_EQ(hits[0].entity_id, m.entity_id);
  EXPECT_NEAR(hits[0].distance, 0.0, 1e-6);
}

TEST(Index, MatchesBruteForceRanking) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng() % 6;
    const std::size_t n_rows = 1 + rng() % 25;
    const auto metric = static_cast<Metric>(trial % 3);
    std::vector<Vector> rows;
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < n_rows; ++r) {
      // Every fourth row duplicates an earlier one to exercise ties.
      if (r > 0 && rng() % 4 == 0)
        rows.push_back(rows[rng() % r]);
      else {
        Vector v(dim);
        for (auto& x : v) x = u(rng);
        rows.push_back(v);
      }
      ids.push_back("e" + std::to_string(rng() % (n_rows / 2 + 1)));
    }
    const auto index = build_index(rows, ids, metric, IndexMode::names_plus_train);
    std::vector<std::vector<float>> frows;
    for (const auto& v : rows) frows.emplace_back(v.begin(), v.end());
    Vector q(dim);
    for (auto& x : q) x = u(rng);
    if (trial % 5 == 0) q.assign(frows[0].begin(), frows[0].end());
    const auto expected = oracle::brute_force_ranking(ids, frows, q, metric);
    const auto hits = index.query(q, expected.size());
    ASSERT_EQ(hits.size(), expected.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(hits[i].entity_id, expected[i].id) << "trial " << trial << " rank " << i;
      EXPECT_EQ(hits[i].distance, expected[i].distance) << "trial " << trial << " rank " << i;
    }
  }
}

TEST(Index, QueryErrors) {
  const auto index = toy_index(Metric::cosine);
  const std::vector<double> wrong = {1.0, 2.0};
  EXPECT_THROW(index.query(wrong, 1), InvalidArgument);
  const std::vector<double> zero = {0.0};
  EXPECT_THROW(index.query(zero, 1), InvalidArgument);
  const auto last = index.query(zero, 2, ZeroQuery::rank_last);
  EXPECT_EQ(last, (std::vector<Hit>{{"A", 2.0}, {"B", 2.0}}));
  const std::vector<double> nan = {std::nan("")};
  EXPECT_THROW(index.query(nan, 1), InvalidArgument);
}

TEST(Index, BuildErrors) {
  const std::vector<Vector> none;
  const std::vector<std::string> no_ids;
  EXPECT_THROW(build_index(none, no_ids, Metric::cosine, IndexMode::canonical_names), DataError);
  const std::vector<Vector> ragged = {{1.0}, {1.0, 2.0}};
  const std::vector<std::string> ids = {"a", "b"};
  EXPECT_THROW(build_index(ragged, ids, Metric::cosine, IndexMode::canonical_names), InvalidArgument);
}

TEST(Index, RoundTripIsBitwise) {
  const auto corpus = synthesize_corpus({});
  const auto params = EncoderParams::random(2048, {2, 4}, 32, 3);
  const auto index = build_index(NgramEncoder(params), corpus, IndexMode::names_plus_train, Metric::cosine);
  testutil::TempDir dir;
  save_index(index, dir / "a.bin");
  const auto loaded = load_index(dir / "a.bin");
  EXPECT_EQ(loaded, index);
  EXPECT_EQ(loaded.digest(), index.digest());
  save_index(loaded, dir / "b.bin");
  EXPECT_EQ(testutil::read_bytes(dir / "a.bin"), testutil::read_bytes(dir / "b.bin"));
  const auto q = encode(params, corpus.test.front().surface);
  EXPECT_EQ(loaded.query(q, 5), index.query(q, 5));
}

TEST(Index, CorruptedFilesAreRejected) {
  testutil::TempDir dir;
  save_index(toy_index(), dir / "i.bin");
  const auto bytes = testutil::read_bytes(dir / "i.bin");
  for (std::size_t pos : {std::size_t{0}, std::size_t{13}, bytes.size() / 2, bytes.size() - 1}) {
    auto flipped = bytes;
    flipped[pos] ^= 0x40;
    testutil::write_bytes(dir / "f.bin", flipped);
    EXPECT_THROW(load_index(dir / "f.bin"), CorruptFileError) << "byte " << pos;
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  testutil::write_bytes(dir / "t.bin", truncated);
  EXPECT_THROW(load_index(dir / "t.bin"), CorruptFileError);
  EXPECT_THROW(load_index(dir / "missing.bin"), MissingFileError);
  // A model file is not an index.
  save_encoder(EncoderParams::zeros(4, {2, 2}, 2), dir / "m.bin");
  EXPECT_THROW(load_index(dir / "m.bin"), CorruptFileError);
}

TEST(Index, EncoderDimensionMismatchIsRejected) {
  const auto corpus = synthesize_corpus({});
  const auto p32 = EncoderParams::random(512, {2, 3}, 32, 1);
  const auto p16 = EncoderParams::random(512, {2, 3}, 16, 1);
  const auto index = build_index(NgramEncoder(p32), corpus, IndexMode::canonical_names, Metric::cosine);
  EXPECT_THROW(topk_accuracy(index, NgramEncoder(p16), corpus.test), InvalidArgument);
}

TEST(Index, EncoderCalledOncePerSurface) {
  SynthesisConfig sc;
  sc.n_entities = 60;
  sc.mentions_per_entity = 10;
  const auto corpus = synthesize_corpus(sc);
  const auto params = EncoderParams::random(512, {2, 3}, 8, 1);
  CountingEncoder enc{NgramEncoder(params)};
  const auto index = build_index(enc, corpus, IndexMode::names_plus_train, Metric::cosine);
  EXPECT_EQ(enc.texts, corpus.entities.size() + corpus.train.size());
  enc.texts = enc.calls = 0;
  topk_accuracy(index, enc, corpus.test);
  EXPECT_EQ(enc.texts, corpus.test.size());
  EXPECT_EQ(enc.calls, (corpus.test.size() + kEncodeChunk - 1) / kEncodeChunk);
}
