#include "aeenc/sampler.h"

#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include "aeenc/errors.h"
#include "test_util.h"

namespace aeenc {
namespace {

// Hand-placed vectors: from H the two nearest facts are p1 then s1; from
// p1 they are H then s1.
class AcsExample : public ::testing::Test {
 protected:
  AcsExample()
      : base_(BaseEncoder::FromEmbeddings(EmbeddingMatrix(
            {"H", "p1", "s1", "p2", "p3"}, 3,
            {1, 1, 0, 1, 0.9, 0, 1, 0.6, 0, 0, 1, 1, 0, 0, 1}))),
        stack_(base_, EncoderMode::kSingle),
        oracle_({BuildTree("t", "H", {{"H", "p1"}, {"p1", "p2"}}, {"p3"})}) {
    for (const char* id : {"H", "p1", "s1", "p2", "p3"}) corpus_.Add(Fact::Make(id, ""));
    index_ = BuildIndex(stack_, corpus_);
  }

  SamplePools Run(int depth, Oracle& oracle) {
    AcsOptions options;
    options.k = 2;
    options.depth_budget = depth;
    return Acs(corpus_.At("H"), index_, stack_, corpus_, oracle, options);
  }

  std::shared_ptr<const BaseEncoder> base_;
  EncoderStack stack_;
  Corpus corpus_;
  PremiseIndex index_;
  GoldOracle oracle_;
};

TEST_F(AcsExample, OneLevel) {
  const SamplePools pools = Run(1, oracle_);
  EXPECT_EQ(pools.positives, (std::set<FactPair>{{"H", "p1"}}));
  EXPECT_EQ(pools.negatives, (std::set<FactPair>{{"H", "s1"}}));
}

TEST_F(AcsExample, RecursesIntoPositives) {
  const SamplePools pools = Run(2, oracle_);
  EXPECT_EQ(pools.positives, (std::set<FactPair>{{"H", "p1"}}));
  EXPECT_EQ(pools.negatives,
            (std::set<FactPair>{{"H", "s1"}, {"p1", "H"}, {"p1", "s1"}}));
}

TEST_F(AcsExample, DepthZeroRetrievesNothing) {
  const SamplePools pools = Run(0, oracle_);
  EXPECT_TRUE(pools.positives.empty());
  EXPECT_TRUE(pools.negatives.empty());
}

class RejectAll : public Oracle {
 public:
  bool Explains(const std::string&, const std::string&) override {
    ++calls;
    return false;
  }
  int calls = 0;
};

TEST_F(AcsExample, RejectAllGivesOnlyNegatives) {
  RejectAll reject;
  const SamplePools pools = Run(3, reject);
  EXPECT_TRUE(pools.positives.empty());
  EXPECT_EQ(pools.negatives, (std::set<FactPair>{{"H", "p1"}, {"H", "s1"}}));
  EXPECT_EQ(reject.calls, 2);
}

TEST_F(AcsExample, NeverProposesTheQueryItself) {
  class AcceptAll : public Oracle {
   public:
    bool Explains(const std::string&, const std::string&) override { return true; }
  } accept;
  const SamplePools pools = Run(4, accept);
  for (const auto& [q, p] : pools.positives) EXPECT_NE(q, p);
  for (const auto& [q, p] : pools.negatives) EXPECT_NE(q, p);
}

TEST_F(AcsExample, AeEncOnOneHypothesisEqualsAcs) {
  AcsOptions options;
  options.k = 2;
  options.depth_budget = 2;
  const SamplePools single = Acs(corpus_.At("H"), index_, stack_, corpus_, oracle_, options);
  const SamplePools all =
      AeEnc({&corpus_.At("H")}, index_, stack_, corpus_, oracle_, options);
  EXPECT_EQ(all.positives, single.positives);
  EXPECT_EQ(all.negatives, single.negatives);
}

TEST_F(AcsExample, VisitedMapSkipsRepeatExpansion) {
  AcsOptions options;
  options.k = 2;
  options.depth_budget = 2;
  AcsVisited visited;
  Acs(corpus_.At("H"), index_, stack_, corpus_, oracle_, options, &visited);
  EXPECT_EQ(visited.at("H"), 2);
  EXPECT_EQ(visited.at("p1"), 1);
  const SamplePools again =
      Acs(corpus_.At("H"), index_, stack_, corpus_, oracle_, options, &visited);
  EXPECT_TRUE(again.positives.empty());
  EXPECT_TRUE(again.negatives.empty());
}

TEST(AeEncTest, DisjointTreesAddUp) {
  const Corpus corpus = testing::MakeCorpus({{"h1", "red apple fruit"},
                                             {"a1", "apple fruit"},
                                             {"h2", "blue ocean water"},
                                             {"a2", "ocean water"},
                                             {"x", "red blue"}});
  EncoderStack stack(BaseEncoder::FromTfidf(corpus), EncoderMode::kSingle);
  const PremiseIndex index = BuildIndex(stack, corpus);
  const std::vector<EntailmentTree> trees = {BuildTree("t1", "h1", {{"h1", "a1"}}, {}),
                                             BuildTree("t2", "h2", {{"h2", "a2"}}, {})};
  GoldOracle oracle(trees);
  AcsOptions options;
  options.k = 1;
  const auto one = AeEnc({&corpus.At("h1")}, index, stack, corpus, oracle, options);
  const auto two = AeEnc({&corpus.At("h2")}, index, stack, corpus, oracle, options);
  const auto both =
      AeEnc({&corpus.At("h1"), &corpus.At("h2")}, index, stack, corpus, oracle, options);
  EXPECT_EQ(both.positives.size(), one.positives.size() + two.positives.size());
  EXPECT_EQ(both.negatives.size(), one.negatives.size() + two.negatives.size());
  options.exec = Execution::kSerial;
  EXPECT_EQ(AeEnc({&corpus.At("h1"), &corpus.At("h2")}, index, stack, corpus, oracle, options),
            both);
}

TEST(GoldOracleTest, Pure) {
  GoldOracle oracle({BuildTree("t", "h", {{"h", "a"}, {"a", "b"}}, {})});
  EXPECT_TRUE(oracle.Explains("h", "a"));
  EXPECT_TRUE(oracle.Explains("a", "b"));
  EXPECT_FALSE(oracle.Explains("h", "b"));
  EXPECT_TRUE(oracle.Explains("h", "a"));
}

TEST(SamplePoolsTest, LaterVerdictWins) {
  SamplePools pools;
  pools.AddPositive("q", "a");
  pools.AddNegative("q", "a");
  EXPECT_TRUE(pools.positives.empty());
  EXPECT_EQ(pools.negatives.size(), 1u);
  pools.AddPositive("q", "a");
  EXPECT_TRUE(pools.negatives.empty());
}

TEST(SamplePoolsTest, SerializationRoundTrip) {
  SamplePools pools;
  pools.AddPositive("q", "a");
  pools.AddNegative("q", "b");
  pools.AddNegative("r", "a");
  pools.round = 3;
  pools.max_depth = 2;
  const std::string text = SerializePools(pools);
  EXPECT_EQ(text.back(), '\n');
  const SamplePools back = PoolsFromJson(nlohmann::json::parse(text));
  EXPECT_EQ(back, pools);
  EXPECT_EQ(SerializePools(back), text);
}

TEST(AnnotationLogTest, AppendAndReplay) {
  testing::TempDir dir;
  const auto path = dir.path() / "log.jsonl";
  {
    AnnotationLog log(path);
    log.Append({"q", "a", true, "2024-01-01T00:00:00Z", "s1"});
    log.Append({"q", "b", false, "2024-01-01T00:00:01Z", "s1"});
  }
  const auto records = AnnotationLog::Replay(path);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_TRUE(records[0].positive);
  EXPECT_EQ(records[1].candidate, "b");
  EXPECT_EQ(records[1].session, "s1");
  const SamplePools pools = PoolsFromAnnotations(records);
  EXPECT_EQ(pools.positives, (std::set<FactPair>{{"q", "a"}}));
  EXPECT_EQ(pools.negatives, (std::set<FactPair>{{"q", "b"}}));
}

TEST(AnnotationLogTest, TornFinalLineIsIgnored) {
  testing::TempDir dir;
  const auto path = dir.path() / "log.jsonl";
  {
    AnnotationLog log(path);
    log.Append({"q", "a", true, NowIso8601(), "s"});
  }
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"query":"q","cand)";
  }
  EXPECT_EQ(AnnotationLog::Replay(path).size(), 1u);
}

TEST(AnnotationLogTest, CorruptMiddleLineIsAParseError) {
  testing::TempDir dir;
  const auto path = dir.path() / "log.jsonl";
  {
    std::ofstream out(path, std::ios::binary);
    out << "{broken\n"
        << R"({"query":"q","candidate":"a","verdict":"pos","ts":"t","session":"s"})"
        << "\n";
  }
  try {
    AnnotationLog::Replay(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(AnnotationLogTest, MissingFileReplaysEmpty) {
  testing::TempDir dir;
  EXPECT_TRUE(AnnotationLog::Replay(dir.path() / "none.jsonl").empty());
}

TEST(InteractiveOracleTest, AsksOncePerPairAndLogs) {
  testing::TempDir dir;
  AnnotationLog log(dir.path() / "log.jsonl");
  int asked = 0;
  InteractiveOracle oracle(
      [&](const std::string&, const std::string& c) {
        ++asked;
        return c == "yes";
      },
      &log, "sess");
  EXPECT_TRUE(oracle.Explains("q", "yes"));
  EXPECT_FALSE(oracle.Explains("q", "no"));
  EXPECT_TRUE(oracle.Explains("q", "yes"));
  EXPECT_EQ(asked, 2);
  EXPECT_EQ(AnnotationLog::Replay(log.path()).size(), 2u);
}

class ComposeTest : public ::testing::Test {
 protected:
  ComposeTest() {
    for (int i = 0; i < 30; ++i) corpus_.Add(Fact::Make("f" + std::to_string(i), ""));
    corpus_.Add(Fact::Make("q", ""));
    for (int i = 0; i < 10; ++i) pools_.AddPositive("q", "f" + std::to_string(i));
    for (int i = 10; i < 16; ++i) pools_.AddNegative("q", "f" + std::to_string(i));
    for (int i = 20; i < 26; ++i) gold_.Append({"q", "f0", "f" + std::to_string(i), Provenance::kGold});
  }

  std::map<Provenance, std::size_t> Count(const TripletStore& s) {
    std::map<Provenance, std::size_t> counts;
    for (const auto& r : s.records) ++counts[r.provenance];
    return counts;
  }

  Corpus corpus_;
  SamplePools pools_;
  TripletStore gold_;
};

TEST_F(ComposeTest, HalfMixSplitsEvenly) {
  ComposeOptions options;
  options.mix_ratio = 0.5;
  options.negatives_per_positive = 4;
  const ComposeResult out = ComposeTrainingSet(pools_, gold_, corpus_, options);
  ASSERT_EQ(out.store.records.size(), 40u);
  auto counts = Count(out.store);
  EXPECT_EQ(counts[Provenance::kActive], 20u);
  EXPECT_EQ(counts[Provenance::kGold], 20u);
  EXPECT_TRUE(out.fallback_queries.empty());
}

TEST_F(ComposeTest, ZeroMixUsesNoActiveNegatives) {
  ComposeOptions options;
  options.mix_ratio = 0.0;
  auto counts = Count(ComposeTrainingSet(pools_, gold_, corpus_, options).store);
  EXPECT_EQ(counts[Provenance::kActive], 0u);
}

TEST_F(ComposeTest, FullMixUsesOnlyActiveNegatives) {
  ComposeOptions options;
  options.mix_ratio = 1.0;
  const auto store = ComposeTrainingSet(pools_, gold_, corpus_, options).store;
  auto counts = Count(store);
  EXPECT_EQ(counts[Provenance::kActive], store.records.size());
}

TEST_F(ComposeTest, ShortfallFallsBackAndFlags) {
  ComposeOptions options;
  options.mix_ratio = 1.0;
  options.negatives_per_positive = 8;
  const ComposeResult out = ComposeTrainingSet(pools_, gold_, corpus_, options);
  EXPECT_EQ(out.fallback_queries, std::vector<std::string>{"q"});
  auto counts = Count(out.store);
  EXPECT_EQ(counts[Provenance::kActive], 60u);
  EXPECT_EQ(counts[Provenance::kGold], 20u);
}

TEST_F(ComposeTest, NoBaseNegativesDrawsRandomFacts) {
  ComposeOptions options;
  options.mix_ratio = 0.5;
  const auto store = ComposeTrainingSet(pools_, TripletStore{}, corpus_, options).store;
  auto counts = Count(store);
  EXPECT_EQ(counts[Provenance::kRandom], 20u);
  for (const auto& r : store.records) {
    EXPECT_NE(r.neg_id, "q");
    EXPECT_GE(std::stoi(r.neg_id.substr(1)), 10) << "a positive was used as a negative";
  }
}

TEST_F(ComposeTest, SeededAndValidated) {
  ComposeOptions options;
  options.seed = 4;
  EXPECT_EQ(ComposeTrainingSet(pools_, gold_, corpus_, options).store.records,
            ComposeTrainingSet(pools_, gold_, corpus_, options).store.records);
  options.mix_ratio = 1.5;
  EXPECT_THROW(ComposeTrainingSet(pools_, gold_, corpus_, options), std::invalid_argument);
}

class IterativeTest : public ::testing::Test {
 protected:
  IterativeTest() {
    corpus_ = testing::MakeCorpus({{"h1", "sun hot star"},   {"a1", "sun star"},
                                   {"b1", "hot things glow"}, {"h2", "ice cold water"},
                                   {"a2", "ice water"},       {"b2", "cold makes ice"},
                                   {"x1", "sun hot"},         {"x2", "cold water"},
                                   {"d1", "rocks"},           {"d2", "trees"}});
    trees_ = {BuildTree("t1", "h1", {{"h1", "a1"}, {"h1", "b1"}}, {"d1"}),
              BuildTree("t2", "h2", {{"h2", "a2"}, {"h2", "b2"}}, {"d2"})};
    gold_ = BuildGoldTriplets(trees_, corpus_);
  }

  IterativeResult Run(int rounds, double lr, bool accumulate = true) {
    EncoderStack stack(BaseEncoder::FromTfidf(corpus_), EncoderMode::kDual);
    GoldOracle oracle(trees_);
    IterativeConfig cfg;
    cfg.acs.k = 3;
    cfg.rounds = rounds;
    cfg.accumulate = accumulate;
    cfg.train.mode = EncoderMode::kDual;
    cfg.train.learning_rate = lr;
    cfg.train.epochs = 2;
    cfg.compose.include_gold_positives = true;
    return ResampleIterative({&corpus_.At("h1"), &corpus_.At("h2")}, corpus_, gold_, oracle,
                             stack, BuildIndex(stack, corpus_), cfg);
  }

  Corpus corpus_;
  std::vector<EntailmentTree> trees_;
  TripletStore gold_;
};

TEST_F(IterativeTest, OneRoundEqualsOneAeEncCall) {
  const auto result = Run(1, 0.5);
  ASSERT_EQ(result.snapshots.size(), 1u);
  EncoderStack stack(BaseEncoder::FromTfidf(corpus_), EncoderMode::kDual);
  GoldOracle oracle(trees_);
  AcsOptions acs;
  acs.k = 3;
  const SamplePools once = AeEnc({&corpus_.At("h1"), &corpus_.At("h2")},
                                 BuildIndex(stack, corpus_), stack, corpus_, oracle, acs);
  EXPECT_EQ(result.snapshots[0].positives, once.positives);
  EXPECT_EQ(result.snapshots[0].negatives, once.negatives);
  EXPECT_EQ(result.snapshots[0].round, 0);
}

TEST_F(IterativeTest, FrozenModelGivesIdenticalSnapshots) {
  const auto result = Run(4, 0.0);
  ASSERT_EQ(result.snapshots.size(), 4u);
  for (const auto& s : result.snapshots) {
    EXPECT_EQ(s.positives, result.snapshots[0].positives);
    EXPECT_EQ(s.negatives, result.snapshots[0].negatives);
  }
}

TEST_F(IterativeTest, AccumulatedPoolsNeverShrink) {
  const auto result = Run(4, 2.0);
  ASSERT_EQ(result.snapshots.size(), 4u);
  for (std::size_t i = 1; i < result.snapshots.size(); ++i) {
    const auto& prev = result.snapshots[i - 1];
    const auto& cur = result.snapshots[i];
    EXPECT_GE(cur.positives.size() + cur.negatives.size(),
              prev.positives.size() + prev.negatives.size());
    EXPECT_EQ(cur.round, static_cast<int>(i));
  }
  EXPECT_EQ(result.reports.size(), 4u);
}

}  // namespace
}  // namespace aeenc
