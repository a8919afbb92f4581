#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "entstd/mining.hpp"
#include "oracles.hpp"

using namespace entstd;

TEST(TripletLoss, HandArithmetic) {
  EXPECT_DOUBLE_EQ(triplet_loss(0.2, 0.9, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(triplet_loss(0.9, 0.2, 0.5), 1.2);
  for (double d : {0.0, 0.3, 1.7}) EXPECT_EQ(triplet_loss(d, d, 0.0), 0.0);
}

TEST(ClassifyTriplet, Categories) {
  const double m = 0.8;
  EXPECT_EQ(classify_triplet(0.1, 0.1 + m + 1, m), TripletCategory::easy);
  EXPECT_EQ(classify_triplet(0.1, 0.1 + m / 2, m), TripletCategory::semihard);
  EXPECT_EQ(classify_triplet(0.5, 0.4, m), TripletCategory::hard);
}

TEST(ClassifyTriplet, BoundariesAreSemihard) {
  EXPECT_EQ(classify_triplet(0.25, 0.25, 1.0), TripletCategory::semihard);
  EXPECT_EQ(classify_triplet(0.25, 1.25, 1.0), TripletCategory::semihard);
  EXPECT_EQ(classify_triplet(0.5, 0.5, 0.0), TripletCategory::semihard);
}

TEST(EnumerateTriplets, SmallCases) {
  const std::vector<char> aabb = {'A', 'A', 'B', 'B'};
  const auto t = enumerate_valid_triplets(std::span<const char>(aabb));
  EXPECT_EQ(t.size(), 8u);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  const std::vector<char> aaa = {'A', 'A', 'A'}, ab = {'A', 'B'};
  EXPECT_TRUE(enumerate_valid_triplets(std::span<const char>(aaa)).empty());
  EXPECT_TRUE(enumerate_valid_triplets(std::span<const char>(ab)).empty());
}

TEST(EnumerateTriplets, MatchesBruteForceOnRandomLabels) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> labels(1 + rng() % 9);
    for (int& l : labels) l = static_cast<int>(rng() % 3);
    const auto got = enumerate_valid_triplets(std::span<const int>(labels));
    const auto want = oracle::valid_triplets(labels);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].anchor, want[i].a);
      EXPECT_EQ(got[i].positive, want[i].p);
      EXPECT_EQ(got[i].negative, want[i].n);
    }
  }
}

namespace {

std::vector<Vector> line(std::initializer_list<double> xs) {
  std::vector<Vector> out;
  for (double x : xs) out.push_back({x});
  return out;
}

const std::vector<int> kAABB = {0, 0, 1, 1};

}  // namespace

TEST(BatchAll, HandExampleOnTheLine) {
  // Pairwise: d01 = 0.1, d23 = 0.1, d02 = 1.0, d03 = 1.1, d12 = 0.9, d13 = 1.0.
  // Gaps (d_an - d_ap) for the 8 triplets: 0.9, 1.0, 0.8, 0.9, 0.9, 0.8, 1.0, 0.9
  // all above 0.5, so every triplet is easy.
  const auto emb = line({0.0, 0.1, 1.0, 1.1});
  const auto r = batch_all_loss(std::span<const Vector>(emb), std::span<const int>(kAABB), 0.5,
                                Metric::euclidean);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.counts, (CategoryCounts{0, 0, 8}));
  // With margin 0.95: gaps 0.8, 0.8 -> semihard losses 0.15 each; 0.9 x4 ->
  // 0.05 each; 1.0 x2 -> easy. Mean over six: (0.3 + 0.2) / 6.
  const auto r2 = batch_all_loss(std::span<const Vector>(emb), std::span<const int>(kAABB), 0.95,
                                 Metric::euclidean);
  EXPECT_EQ(r2.counts, (CategoryCounts{0, 6, 2}));
  EXPECT_NEAR(r2.loss, 0.5 / 6.0, 1e-12);
}

TEST(BatchAll, AllEasyBatch) {
  const auto emb = line({0.0, 0.0, 10.0, 10.0});
  const auto r = batch_all_loss(std::span<const Vector>(emb), std::span<const int>(kAABB), 1.0,
                                Metric::euclidean);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.counts.easy, 8u);
}

TEST(BatchAll, DegenerateBatchesAreRejected) {
  const auto emb = line({0.0, 1.0, 2.0});
  const std::vector<int> one_class = {0, 0, 0}, no_pair = {0, 1, 2};
  EXPECT_THROW(batch_all_loss(std::span<const Vector>(emb), std::span<const int>(one_class), 1.0,
                              Metric::euclidean),
               MiningError);
  EXPECT_THROW(batch_all_loss(std::span<const Vector>(emb), std::span<const int>(no_pair), 1.0,
                              Metric::euclidean),
               MiningError);
}

TEST(BatchHard, HandExampleOnTheLine) {
  const auto emb = line({0.0, 0.3, 1.0, 1.4});
  const auto r = batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(kAABB), 1.0,
                                 Metric::euclidean);
  ASSERT_EQ(r.per_anchor.size(), 4u);
  const double want[4][2] = {{0.3, 1.0}, {0.3, 0.7}, {0.4, 0.7}, {0.4, 1.1}};
  for (int a = 0; a < 4; ++a) {
    EXPECT_NEAR(r.per_anchor[a].d_ap_max, want[a][0], 1e-12);
    EXPECT_NEAR(r.per_anchor[a].d_an_min, want[a][1], 1e-12);
  }
  EXPECT_NEAR(r.loss, 0.475, 1e-12);
}

TEST(BatchHard, IdenticalEmbeddingsGiveTheMargin) {
  const auto emb = line({0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  const std::vector<int> labels = {0, 0, 1, 1, 2, 2};
  for (double m : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    const auto r = batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(labels), m,
                                   Metric::squared_euclidean);
    EXPECT_DOUBLE_EQ(r.loss, m);
  }
}

TEST(BatchHard, TiesGoToTheLowestIndex) {
  const auto emb = line({0.0, 1.0, -1.0, 2.0, -2.0, 2.0});
  const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
  const auto r = batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(labels), 1.0,
                                 Metric::euclidean);
  EXPECT_EQ(r.per_anchor[0].positive, 1u);  // d = 1 to both 1 and 2
  EXPECT_EQ(r.per_anchor[0].negative, 3u);  // d = 2 to 3, 4 and 5
}

TEST(BatchHard, SingletonClassIsRejected) {
  const auto emb = line({0.0, 1.0, 2.0});
  const std::vector<int> labels = {0, 0, 1};
  EXPECT_THROW(batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(labels), 1.0,
                               Metric::euclidean),
               MiningError);
  const std::vector<int> single = {0, 0, 0};
  EXPECT_THROW(batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(single), 1.0,
                               Metric::euclidean),
               MiningError);
}

TEST(Mining, SeparatedClassesHaveZeroLossUnderEveryMetric) {
  std::vector<Vector> emb;
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 3; ++k) {
      Vector v(3, 0.0);
      v[c] = 100.0 + k * 1e-3;
      emb.push_back(v);
      labels.push_back(c);
    }
  for (auto m : {Metric::euclidean, Metric::squared_euclidean}) {
    EXPECT_EQ(batch_all_loss(std::span<const Vector>(emb), std::span<const int>(labels), 1.0, m).loss, 0.0);
    EXPECT_EQ(batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(labels), 1.0, m).loss, 0.0);
  }
  // Orthogonal directions are at cosine distance 1.
  EXPECT_EQ(batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(labels), 0.9,
                            Metric::cosine).loss,
            0.0);
}

TEST(Mining, OracleEquivalenceOnRandomBatches) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01;
  const double margins[] = {0.5, 1, 2, 5, 10};
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t classes = 2 + rng() % 3;
    const std::size_t b = std::min<std::size_t>(12, classes * (2 + rng() % 3));
    const std::size_t dim = 1 + rng() % 4;
    std::vector<int> labels(b);
    for (std::size_t i = 0; i < b; ++i) labels[i] = static_cast<int>(i % classes);
    std::shuffle(labels.begin(), labels.end(), rng);
    std::vector<Vector> emb(b, Vector(dim));
    for (auto& v : emb)
      for (double& x : v) x = n01(rng);
    const Metric m = static_cast<Metric>(trial % 3);
    const double margin = margins[trial % 5];

    const auto all = batch_all_loss(std::span<const Vector>(emb), std::span<const int>(labels), margin, m);
    const auto want_all = oracle::batch_all<double>(emb, labels, margin, m);
    EXPECT_NEAR(all.loss, want_all.loss, 1e-6);
    EXPECT_EQ(all.counts, (CategoryCounts{want_all.hard, want_all.semihard, want_all.easy}));
    EXPECT_EQ(all.counts.total(), oracle::valid_triplets(labels).size());

    const auto hard = batch_hard_loss(std::span<const Vector>(emb), std::span<const int>(labels), margin, m);
    const auto want_hard = oracle::batch_hard<double>(emb, labels, margin, m);
    EXPECT_NEAR(hard.loss, want_hard.loss, 1e-6);
    ASSERT_EQ(hard.per_anchor.size(), b);
    for (std::size_t a = 0; a < b; ++a) {
      EXPECT_EQ(hard.per_anchor[a].positive, want_hard.picks[a].pos);
      EXPECT_EQ(hard.per_anchor[a].negative, want_hard.picks[a].neg);
    }
    EXPECT_GE(all.loss, 0.0);
    EXPECT_GE(hard.loss, 0.0);
  }
}

TEST(Strategy, NamesAndSchedule) {
  for (auto s : {Strategy::batch_all, Strategy::batch_hard, Strategy::hybrid})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("semi"), InvalidArgument);
  const MiningStrategy hybrid{Strategy::hybrid, 100};
  EXPECT_EQ(hybrid.at_epoch(1), Strategy::batch_all);
  EXPECT_EQ(hybrid.at_epoch(100), Strategy::batch_all);
  EXPECT_EQ(hybrid.at_epoch(101), Strategy::batch_hard);
  EXPECT_EQ((MiningStrategy{Strategy::batch_hard, 0}.at_epoch(1)), Strategy::batch_hard);
}

namespace {

std::vector<MentionRecord> classes_of(std::size_t n_classes, std::size_t per_class) {
  std::vector<MentionRecord> out;
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t k = 0; k < per_class; ++k)
      out.push_back({"m" + std::to_string(c) + "_" + std::to_string(k), "E" + std::to_string(c)});
  return out;
}

}  // namespace

TEST(SampleBatches, FullScaleShape) {
  const auto samples = classes_of(32, 10);
  const auto plans = sample_batches(samples, 10, 16, 1, 1);
  ASSERT_EQ(plans.size(), 2u);
  std::set<std::string> seen;
  for (const auto& p : plans) {
    EXPECT_EQ(p.size(), 160u);
    EXPECT_EQ(p.groups.size(), 16u);
    for (const auto& g : p.groups) {
      EXPECT_TRUE(seen.insert(g.entity_id).second) << "class visited twice";
      EXPECT_EQ(std::set<std::size_t>(g.members.begin(), g.members.end()).size(), 10u);
      for (auto m : g.members) EXPECT_EQ(samples[m].entity_id, g.entity_id);
    }
  }
}

TEST(SampleBatches, SmallClassIsToppedUpWithReplacement) {
  auto samples = classes_of(3, 6);
  samples.push_back({"solo a", "S"});
  samples.push_back({"solo b", "S"});
  samples.push_back({"single", "X"});  // one sample: never eligible
  bool found = false;
  for (std::size_t epoch = 1; epoch <= 10; ++epoch)
    for (const auto& p : sample_batches(samples, 5, 2, 3, epoch))
      for (const auto& g : p.groups) {
        EXPECT_NE(g.entity_id, "X");
        EXPECT_EQ(g.members.size(), 5u);
        if (g.entity_id == "S") {
          found = true;
          const std::set<std::size_t> distinct(g.members.begin(), g.members.end());
          EXPECT_EQ(distinct, (std::set<std::size_t>{18, 19}));
        }
      }
  EXPECT_TRUE(found);
}

TEST(SampleBatches, DeterministicPerSeedAndEpoch) {
  const auto samples = classes_of(20, 7);
  EXPECT_EQ(sample_batches(samples, 4, 3, 11, 2), sample_batches(samples, 4, 3, 11, 2));
  EXPECT_NE(sample_batches(samples, 4, 3, 11, 2), sample_batches(samples, 4, 3, 11, 3));
  EXPECT_NE(sample_batches(samples, 4, 3, 11, 2), sample_batches(samples, 4, 3, 12, 2));
}

TEST(SampleBatches, EveryPlanIsAValidMiningBatch) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MentionRecord> samples;
    const std::size_t n_classes = 2 + rng() % 10;
    for (std::size_t c = 0; c < n_classes; ++c)
      for (std::size_t k = 0, n = 1 + rng() % 6; k < n; ++k)
        samples.push_back({"s", "E" + std::to_string(c)});
    const std::size_t g = 2 + rng() % 4, b = 2 + rng() % 3;
    std::vector<BatchPlan> plans;
    try {
      plans = sample_batches(samples, g, b, rng(), 1);
    } catch (const MiningError&) {
      continue;  // fewer than b eligible classes
    }
    for (const auto& p : plans) {
      std::vector<std::size_t> members, labels;
      p.flatten(members, labels);
      EXPECT_EQ(std::set<std::size_t>(labels.begin(), labels.end()).size(), b);
      for (const auto& grp : p.groups) EXPECT_EQ(grp.members.size(), g);
    }
  }
}

TEST(SampleBatches, TooFewEligibleClasses) {
  const auto samples = classes_of(3, 2);
  EXPECT_THROW(sample_batches(samples, 2, 4, 0, 1), MiningError);
  EXPECT_THROW(sample_batches(samples, 1, 2, 0, 1), MiningError);
}
