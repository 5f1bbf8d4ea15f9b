#include "aeenc/corpus.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "aeenc/errors.h"
#include "aeenc/tokenize.h"
#include "test_util.h"

namespace aeenc {
namespace {

using testing::MakeCorpus;

const char kThreeNodeTree[] =
    R"({"id":"t1","facts":[{"id":"h","text":"the sun is hot"},)"
    R"({"id":"p1","text":"the sun is a star"},{"id":"p2","text":"stars are hot"}],)"
    R"("edges":[["h","p1"],["h","p2"]],"root":"h","distractors":[]})"
    "\n";

TEST(FactTest, TokensFollowTheTokenizer) {
  const Fact f = Fact::Make("a", "Plants need Sunlight.");
  EXPECT_EQ(f.tokens, Tokenize(f.text));
}

TEST(CorpusTest, RejectsDuplicateIds) {
  Corpus c = MakeCorpus({{"a", "x"}});
  EXPECT_THROW(c.Add(Fact::Make("a", "y")), IntegrityError);
}

TEST(CorpusTest, LookupByIdAndOrder) {
  Corpus c = MakeCorpus({{"a", "x"}, {"b", "y"}});
  EXPECT_EQ(c.At("b").text, "y");
  EXPECT_EQ(c.IndexOf("b"), 1u);
  EXPECT_EQ(c.Find("zz"), nullptr);
  EXPECT_THROW(c.At("zz"), IntegrityError);
}

TEST(IngestTest, ThreeNodeTree) {
  const Dataset ds = IngestTreesFromString(kThreeNodeTree, TreeFormat::kCanonical);
  EXPECT_EQ(ds.corpus.size(), 3u);
  ASSERT_EQ(ds.trees.size(), 1u);
  EXPECT_EQ(ds.trees[0].root.fact_id, "h");
  EXPECT_EQ(ds.trees[0].root.role, NodeRole::kHypothesis);
  ASSERT_EQ(ds.trees[0].root.children.size(), 2u);
  EXPECT_EQ(ds.trees[0].root.children[0].role, NodeRole::kLeaf);
}

TEST(IngestTest, MissingFactNamesTheId) {
  const std::string line =
      R"({"id":"t1","facts":[{"id":"h","text":"a"}],"edges":[["h","x9"]],"root":"h"})";
  try {
    IngestTreesFromString(line, TreeFormat::kCanonical);
    FAIL() << "expected IntegrityError";
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("\"x9\""), std::string::npos) << e.what();
  }
}

TEST(IngestTest, DuplicateTreeId) {
  const std::string payload = std::string(kThreeNodeTree) + kThreeNodeTree;
  EXPECT_THROW(IngestTreesFromString(payload, TreeFormat::kCanonical), IntegrityError);
}

TEST(IngestTest, MalformedLineCarriesLineNumber) {
  const std::string payload = std::string(kThreeNodeTree) + "\n{not json\n";
  try {
    IngestTreesFromString(payload, TreeFormat::kCanonical);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(IngestTest, WrongFieldTypeIsAParseError) {
  const std::string payload = R"({"id":"t1","root":7})";
  EXPECT_THROW(IngestTreesFromString(payload, TreeFormat::kCanonical), ParseError);
}

TEST(IngestTest, ConflictingFactTextIsAnIntegrityError) {
  const std::string payload =
      R"({"id":"t1","facts":[{"id":"h","text":"a"},{"id":"h","text":"b"}],"root":"h"})";
  EXPECT_THROW(IngestTreesFromString(payload, TreeFormat::kCanonical), IntegrityError);
}

TEST(IngestTest, TreesMayReferenceABaseCorpus) {
  Corpus base = MakeCorpus({{"h", "a b"}, {"p", "b c"}, {"d", "x y"}});
  const Dataset ds = IngestTreesFromString(
      R"({"id":"t","edges":[["h","p"]],"root":"h","distractors":["d"]})",
      TreeFormat::kCanonical, std::move(base));
  ASSERT_EQ(ds.trees.size(), 1u);
  EXPECT_EQ(ds.trees[0].distractor_ids, std::vector<std::string>{"d"});
}

TEST(IngestTest, EntailmentBankRecord) {
  const std::string line =
      R"({"id":"eb1","hypothesis":"an oak needs light",)"
      R"("proof":"sent1 & sent2 -> int1: an oak is a plant that needs light; int1 & sent3 -> hypothesis;",)"
      R"("meta":{"triples":{"sent1":"an oak is a plant","sent2":"plants need light",)"
      R"("sent3":"light comes from the sun","sent4":"rocks are hard"},)"
      R"("worldtree_provenance":{"sent1":{"uuid":"abc-1"}},"distractors":["sent4"]}})";
  const Dataset ds = IngestTreesFromString(line, TreeFormat::kEntailmentBank);
  ASSERT_EQ(ds.trees.size(), 1u);
  const auto& tree = ds.trees[0];
  EXPECT_EQ(ds.corpus.At(tree.root.fact_id).text, "an oak needs light");
  EXPECT_EQ(tree.root.fact_id.substr(0, 2), "h-");
  EXPECT_TRUE(ds.corpus.Contains("p-abc-1"));
  EXPECT_EQ(ExtractPairs(tree).size(), 4u);
  EXPECT_EQ(TreeDepth(tree), 2);
  ASSERT_EQ(tree.distractor_ids.size(), 1u);
  EXPECT_EQ(ds.corpus.At(tree.distractor_ids[0]).text, "rocks are hard");
}

TEST(IngestTest, EntailmentBankContextString) {
  const std::string line =
      R"({"id":"eb2","hypothesis":"h text","context":"sent1: first fact sent2: second fact",)"
      R"("proof":"sent1 & sent2 -> hypothesis"})";
  const Dataset ds = IngestTreesFromString(line, TreeFormat::kEntailmentBank);
  ASSERT_EQ(ds.trees.size(), 1u);
  std::vector<std::string> texts;
  for (const auto& [p, c] : ExtractPairs(ds.trees[0])) texts.push_back(ds.corpus.At(c).text);
  EXPECT_EQ(texts, (std::vector<std::string>{"first fact", "second fact"}));
}

TEST(IngestTest, EntailmentBankUnknownProofNode) {
  const std::string line =
      R"({"id":"eb3","hypothesis":"h","context":"sent1: a","proof":"sent1 & sent9 -> hypothesis"})";
  EXPECT_THROW(IngestTreesFromString(line, TreeFormat::kEntailmentBank), IntegrityError);
}

TEST(BuildTreeTest, RejectsCycles) {
  EXPECT_THROW(BuildTree("t", "a", {{"a", "b"}, {"b", "a"}}, {}), IntegrityError);
}

TEST(BuildTreeTest, RejectsTwoParents) {
  EXPECT_THROW(BuildTree("t", "a", {{"a", "b"}, {"a", "c"}, {"c", "b"}}, {}),
               IntegrityError);
}

TEST(BuildTreeTest, RejectsUnreachableEdges) {
  EXPECT_THROW(BuildTree("t", "a", {{"a", "b"}, {"x", "y"}}, {}), IntegrityError);
}

TEST(BuildTreeTest, RejectsDistractorInsideTree) {
  EXPECT_THROW(BuildTree("t", "a", {{"a", "b"}}, {"b"}), IntegrityError);
}

TEST(BuildTreeTest, AssignsRoles) {
  const auto tree = BuildTree("t", "H", {{"H", "I1"}, {"H", "P2"}, {"I1", "P3"}}, {});
  EXPECT_EQ(tree.root.role, NodeRole::kHypothesis);
  EXPECT_EQ(tree.root.children[0].role, NodeRole::kIntermediate);
  EXPECT_EQ(tree.root.children[1].role, NodeRole::kLeaf);
}

TEST(ExtractPairsTest, PreOrder) {
  const auto tree = BuildTree(
      "t", "H", {{"H", "I1"}, {"H", "P2"}, {"I1", "P3"}, {"I1", "P4"}}, {});
  const std::vector<FactPair> expected = {
      {"H", "I1"}, {"H", "P2"}, {"I1", "P3"}, {"I1", "P4"}};
  EXPECT_EQ(ExtractPairs(tree), expected);
  EXPECT_EQ(TreeFactIds(tree), (std::vector<std::string>{"H", "I1", "P3", "P4", "P2"}));
  EXPECT_EQ(TreeDepth(tree), 2);
}

TEST(ExtractPairsTest, RootOnly) {
  const auto tree = BuildTree("t", "H", {}, {});
  EXPECT_TRUE(ExtractPairs(tree).empty());
  EXPECT_EQ(TreeDepth(tree), 0);
}

TEST(JaccardTest, Examples) {
  const Fact a = Fact::Make("a", "the sun is hot");
  EXPECT_DOUBLE_EQ(JaccardOverlap(a, a), 1.0);
  EXPECT_DOUBLE_EQ(JaccardOverlap(a, Fact::Make("b", "cold moon")), 0.0);
  EXPECT_DOUBLE_EQ(JaccardOverlap(a, Fact::Make("c", "the sun is bright")), 0.6);
  EXPECT_DOUBLE_EQ(JaccardOverlap(Fact::Make("d", ""), Fact::Make("e", "..")), 1.0);
}

TEST(JaccardTest, IgnoresRepeatedTokens) {
  EXPECT_DOUBLE_EQ(JaccardOverlap(Fact::Make("a", "a a b"), Fact::Make("b", "a b")), 1.0);
}

class GoldTripletTest : public ::testing::Test {
 protected:
  Corpus corpus_ = MakeCorpus({{"h", "h"},
                               {"p1", "p1"},
                               {"p2", "p2"},
                               {"d1", "d1"},
                               {"d2", "d2"},
                               {"d3", "d3"}});
};

TEST_F(GoldTripletTest, CrossProductOfPairsAndDistractors) {
  const auto tree = BuildTree("t", "h", {{"h", "p1"}, {"h", "p2"}}, {"d1", "d2", "d3"});
  const TripletStore store = BuildGoldTriplets({tree}, corpus_);
  ASSERT_EQ(store.records.size(), 6u);
  for (const auto& r : store.records) EXPECT_EQ(r.provenance, Provenance::kGold);
  EXPECT_EQ(store.records[0], (Triplet{"h", "p1", "d1", Provenance::kGold}));
  EXPECT_EQ(store.records[5], (Triplet{"h", "p2", "d3", Provenance::kGold}));
}

TEST_F(GoldTripletTest, RandomPoolFallback) {
  const auto tree = BuildTree("t", "h", {{"h", "p1"}}, {});
  const TripletStore store = BuildGoldTriplets({tree}, corpus_, {true, 2, 7});
  ASSERT_EQ(store.records.size(), 2u);
  std::set<std::string> negatives;
  for (const auto& r : store.records) {
    EXPECT_EQ(r.provenance, Provenance::kRandom);
    EXPECT_NE(r.neg_id, "h");
    EXPECT_NE(r.neg_id, "p1");
    negatives.insert(r.neg_id);
  }
  EXPECT_EQ(negatives.size(), 2u);
  EXPECT_EQ(BuildGoldTriplets({tree}, corpus_, {true, 2, 7}).records, store.records);
}

TEST_F(GoldTripletTest, NoDistractorsWithoutPoolContributesNothing) {
  const auto tree = BuildTree("t", "h", {{"h", "p1"}}, {});
  EXPECT_TRUE(BuildGoldTriplets({tree}, corpus_).records.empty());
}

TEST(TripletStoreTest, RejectsPosEqualsNeg) {
  TripletStore s;
  EXPECT_THROW(s.Append({"h", "p", "p", Provenance::kGold}), IntegrityError);
}

TEST(TripletStoreTest, SerializationRoundTrip) {
  TripletStore s;
  s.Append({"h", "p", "n", Provenance::kActive});
  s.Append({"h", "p", "m", Provenance::kRandom});
  EXPECT_EQ(ParseTriplets(SerializeTriplets(s)).records, s.records);
}

TEST(TripletStoreTest, ValidateFlagsUnknownIds) {
  TripletStore s;
  s.Append({"h", "p", "zz", Provenance::kGold});
  EXPECT_THROW(ValidateTriplets(s, MakeCorpus({{"h", "a"}, {"p", "b"}})), IntegrityError);
}

TEST(SerializeTest, CanonicalRoundTripIsAFixedPoint) {
  const Dataset ds = IngestTreesFromString(kThreeNodeTree, TreeFormat::kCanonical);
  const std::string once = SerializeTrees(ds.corpus, ds.trees);
  const Dataset again = IngestTreesFromString(once, TreeFormat::kCanonical);
  EXPECT_EQ(SerializeTrees(again.corpus, again.trees), once);
}

TEST(SerializeTest, CorpusRoundTrip) {
  const Corpus c = MakeCorpus({{"a", "x y"}, {"b", "\"quoted\" text"}});
  const Corpus back = LoadCorpusFromString(SerializeCorpus(c));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.At("b").text, "\"quoted\" text");
}

}  // namespace
}  // namespace aeenc
