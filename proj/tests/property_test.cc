// Randomized checks of invariants that must hold for any input.
#include <gtest/gtest.h>

#include <algorithm>

#include "aeenc/corpus.h"
#include "aeenc/evaluator.h"
#include "aeenc/index.h"
#include "aeenc/sampler.h"
#include "test_util.h"

namespace aeenc {
namespace {

struct RandomWorld {
  Corpus corpus;
  std::vector<EntailmentTree> trees;
};

RandomWorld MakeWorld(std::uint64_t seed, std::size_t n_trees = 4) {
  Rng rng(seed);
  RandomWorld w;
  const char* words[] = {"sun", "star", "hot", "light", "plant", "grow", "water",
                         "ice", "cold", "rock", "hard", "air", "wind", "moon"};
  auto sentence = [&] {
    std::string s;
    for (std::size_t i = 0, n = 2 + rng.Index(4); i < n; ++i) s += std::string(words[rng.Index(14)]) + " ";
    return s;
  };
  std::size_t next = 0;
  auto fresh = [&] {
    const std::string id = "f" + std::to_string(next++);
    w.corpus.Add(Fact::Make(id, sentence()));
    return id;
  };
  std::vector<std::string> fillers;
  for (int i = 0; i < 15; ++i) fillers.push_back(fresh());
  for (std::size_t t = 0; t < n_trees; ++t) {
    const std::string root = fresh();
    std::vector<std::string> nodes = {root};
    std::vector<FactPair> edges;
    for (std::size_t i = 0, n = 1 + rng.Index(6); i < n; ++i) {
      const std::string parent = nodes[rng.Index(nodes.size())];
      const std::string child = fresh();
      edges.push_back({parent, child});
      nodes.push_back(child);
    }
    std::vector<std::string> distractors;
    for (std::size_t i : rng.Sample(fillers.size(), rng.Index(4))) distractors.push_back(fillers[i]);
    w.trees.push_back(BuildTree("t" + std::to_string(t), root, edges, distractors));
  }
  return w;
}

TEST(CorpusProperty, PairsRebuildTheTree) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const RandomWorld w = MakeWorld(seed);
    for (const auto& tree : w.trees) {
      const auto rebuilt = BuildTree(tree.id, tree.root.fact_id, ExtractPairs(tree),
                                     tree.distractor_ids);
      EXPECT_EQ(ExtractPairs(rebuilt), ExtractPairs(tree));
      auto a = ExtractPairs(tree);
      std::sort(a.begin(), a.end());
      EXPECT_TRUE(std::adjacent_find(a.begin(), a.end()) == a.end());
    }
  }
}

TEST(CorpusProperty, JaccardSymmetricAndOneIffSameTokenSet) {
  const RandomWorld w = MakeWorld(1);
  const auto& facts = w.corpus.facts();
  for (std::size_t i = 0; i < facts.size(); ++i) {
    for (std::size_t j = 0; j < facts.size(); ++j) {
      const double a = JaccardOverlap(facts[i], facts[j]);
      EXPECT_EQ(a, JaccardOverlap(facts[j], facts[i]));
      const std::set<std::string> si(facts[i].tokens.begin(), facts[i].tokens.end());
      const std::set<std::string> sj(facts[j].tokens.begin(), facts[j].tokens.end());
      EXPECT_EQ(a == 1.0, si == sj);
    }
  }
}

TEST(CorpusProperty, GoldTripletCountIsPairsTimesDistractors) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const RandomWorld w = MakeWorld(seed);
    std::size_t expected = 0;
    for (const auto& t : w.trees) expected += ExtractPairs(t).size() * t.distractor_ids.size();
    EXPECT_EQ(BuildGoldTriplets(w.trees, w.corpus).records.size(), expected);
  }
}

TEST(CorpusProperty, CanonicalFormatRoundTrips) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const RandomWorld w = MakeWorld(seed);
    const std::string once = SerializeTrees(w.corpus, w.trees);
    const Dataset back = IngestTreesFromString(once, TreeFormat::kCanonical);
    EXPECT_EQ(SerializeTrees(back.corpus, back.trees), once);
  }
}

TEST(IndexProperty, FullRankingConsistentWithPairwiseScores) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RandomWorld w = MakeWorld(seed);
    EncoderStack stack(BaseEncoder::FromTfidf(w.corpus), EncoderMode::kDual);
    Rng rng(seed);
    for (auto& x : stack.mutable_query_adapter().mutable_weights().data()) x += 0.05 * rng.Normal();
    const PremiseIndex index = BuildIndex(stack, w.corpus);
    const Fact& q = w.corpus.facts()[rng.Index(w.corpus.size())];
    const auto all = RetrieveTopK(index, stack, q, {w.corpus.size(), false});
    ASSERT_EQ(all.size(), w.corpus.size());
    const Vector qv = stack.Encode(q, EncodeSide::kQuery);
    for (std::size_t i = 0; i + 1 < all.size(); ++i) {
      EXPECT_TRUE(all[i].score > all[i + 1].score ||
                  (all[i].score == all[i + 1].score && all[i].fact_id < all[i + 1].fact_id));
      const double direct =
          CosineScore(qv, stack.Encode(w.corpus.At(all[i].fact_id), EncodeSide::kPremise)).score;
      EXPECT_NEAR(all[i].score, direct, 1e-12);
    }
  }
}

TEST(SamplerProperty, GoldOraclePoolsAreConsistentWithTrees) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RandomWorld w = MakeWorld(seed);
    EncoderStack stack(BaseEncoder::FromTfidf(w.corpus), EncoderMode::kSingle);
    const PremiseIndex index = BuildIndex(stack, w.corpus);
    GoldOracle oracle(w.trees);
    std::vector<const Fact*> hyps;
    for (const auto& t : w.trees) hyps.push_back(&w.corpus.At(t.root.fact_id));
    AcsOptions options;
    options.k = 5;
    options.depth_budget = MaxTreeDepth(w.trees);
    const SamplePools pools = AeEnc(hyps, index, stack, w.corpus, oracle, options);
    for (const auto& [q, p] : pools.positives) {
      EXPECT_TRUE(oracle.IsGold(q, p));
      EXPECT_FALSE(pools.negatives.contains({q, p}));
      EXPECT_NE(q, p);
    }
    for (const auto& [q, p] : pools.negatives) {
      EXPECT_FALSE(oracle.IsGold(q, p));
      EXPECT_NE(q, p);
      const auto top = RetrieveTopK(index, stack, w.corpus.At(q), {options.k, true});
      EXPECT_TRUE(std::any_of(top.begin(), top.end(),
                              [&](const ScoredFact& s) { return s.fact_id == p; }));
    }
  }
}

TEST(EvaluatorProperty, MetricsBoundedAndPerfectRankingScoresOne) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.Index(20);
    std::vector<std::string> ranking;
    for (std::size_t i = 0; i < n; ++i) ranking.push_back("d" + std::to_string(i));
    rng.Shuffle(ranking);
    std::set<std::string> gold;
    for (std::size_t i : rng.Sample(n, 1 + rng.Index(n))) gold.insert("d" + std::to_string(i));
    const double ap = AveragePrecision(ranking, gold);
    const double nd = NdcgAtK(ranking, gold, kAllRanks);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0 + 1e-12);
    EXPECT_GE(nd, 0.0);
    EXPECT_LE(nd, 1.0 + 1e-12);
    std::stable_partition(ranking.begin(), ranking.end(),
                          [&](const std::string& id) { return gold.contains(id); });
    EXPECT_NEAR(AveragePrecision(ranking, gold), 1.0, 1e-12);
    EXPECT_NEAR(NdcgAtK(ranking, gold, kAllRanks), 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace aeenc
