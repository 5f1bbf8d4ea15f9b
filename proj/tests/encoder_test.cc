#include "aeenc/encoder.h"

#include <gtest/gtest.h>

#include <cmath>

#include "aeenc/errors.h"
#include "test_util.h"

namespace aeenc {
namespace {

using testing::MakeCorpus;

TEST(TfidfTest, SingleFactHasEqualEntries) {
  const EmbeddingMatrix m = TfidfEncode(MakeCorpus({{"x", "a b"}}));
  ASSERT_EQ(m.dim(), 2u);
  EXPECT_DOUBLE_EQ(m.row(0)[0], m.row(0)[1]);
  EXPECT_NEAR(Norm(m.row(0)), 1.0, 1e-12);
}

TEST(TfidfTest, RarerTermsWeighMore) {
  const TfidfModel model(MakeCorpus({{"x", "a b"}, {"y", "a c"}}));
  EXPECT_GT(model.idf(*model.TermIndex("b")), model.idf(*model.TermIndex("a")));
}

TEST(TfidfTest, HandComputedTable) {
  // df: a=3, b=2, c=1 over N=3; idf = ln(4/(1+df)) + 1.
  const EmbeddingMatrix m =
      TfidfEncode(MakeCorpus({{"d1", "a b"}, {"d2", "a c"}, {"d3", "a b b"}}));
  ASSERT_EQ(m.dim(), 3u);
  const double expected[3][3] = {
      {0.613355537024972, 0.789806929066091, 0.0},
      {0.508542320378327, 0.0, 0.861036995943976},
      {0.361965000988394, 0.932191685255491, 0.0},
  };
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(m.row(r)[c], expected[r][c], 1e-12);
  }
}

TEST(TfidfTest, VocabularyIsLexicographic) {
  const TfidfModel model(MakeCorpus({{"x", "zeta alpha mid"}}));
  EXPECT_EQ(model.vocabulary(), (std::vector<std::string>{"alpha", "mid", "zeta"}));
}

TEST(TfidfTest, EmptyCorpusThrows) {
  EXPECT_THROW(TfidfModel(Corpus{}), std::invalid_argument);
}

TEST(TfidfTest, UnknownTokensAreIgnored) {
  const TfidfModel model(MakeCorpus({{"x", "a b"}}));
  const Vector v = model.Encode({"a", "never"});
  EXPECT_NEAR(v[0], 1.0, 1e-12);
  EXPECT_EQ(v[1], 0.0);
}

TEST(CosineTest, Examples) {
  EXPECT_DOUBLE_EQ(CosineScore(Vector{1, 0}, Vector{1, 0}).score, 1.0);
  EXPECT_DOUBLE_EQ(CosineScore(Vector{1, 0}, Vector{0, 1}).score, 0.0);
  EXPECT_NEAR(CosineScore(Vector{1, 2, 3}, Vector{4, 5, 6}).score,
              32.0 / std::sqrt(14.0 * 77.0), 1e-15);
  EXPECT_NEAR(CosineScore(Vector{1, 2, 3}, Vector{4, 5, 6}).score, 0.9746, 5e-5);
}

TEST(CosineTest, ZeroVectorIsDegenerate) {
  const Similarity s = CosineScore(Vector{0, 0}, Vector{1, 0});
  EXPECT_EQ(s.score, 0.0);
  EXPECT_TRUE(s.degenerate);
}

TEST(CosineTest, ScaleInvariant) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Vector u = testing::RandomVector(rng, 6);
    Vector v = testing::RandomVector(rng, 6);
    const double s = CosineScore(u, v).score;
    const double a = 0.1 + 10 * rng.Uniform();
    const double b = 0.1 + 10 * rng.Uniform();
    for (auto& x : u) x *= a;
    for (auto& x : v) x *= b;
    EXPECT_NEAR(CosineScore(u, v).score, s, 1e-12);
  }
}

TEST(EmbeddingsTest, ParsesWellFormedFile) {
  const EmbeddingMatrix m =
      ParseEmbeddings("EMB v1 2 4\n1 2 3 4\n0.5 -1 0 2.25\n", "a\nb\n");
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.dim(), 4u);
  EXPECT_EQ(m.row(1)[3], 2.25);
  EXPECT_EQ(*m.Find("b"), 1u);
}

TEST(EmbeddingsTest, DimDriftReportsLine) {
  try {
    ParseEmbeddings("EMB v1 2 4\n1 2 3 4\n1 2 3\n", "a\nb\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(EmbeddingsTest, NonNumericAndCountMismatch) {
  EXPECT_THROW(ParseEmbeddings("EMB v1 1 2\n1 x\n", "a\n"), ParseError);
  EXPECT_THROW(ParseEmbeddings("EMB v1 2 2\n1 2\n3 4\n", "a\n"), ParseError);
  EXPECT_THROW(ParseEmbeddings("EMB v2 1 2\n1 2\n", "a\n"), ParseError);
}

TEST(EmbeddingsTest, SaveLoadRoundTripIsExact) {
  Rng rng(11);
  std::vector<double> values(3 * 5);
  for (auto& v : values) v = rng.Normal() * 1e3;
  values[0] = 1.0 / 3.0;
  const EmbeddingMatrix m({"x", "y", "z"}, 5, values);
  testing::TempDir dir;
  SaveEmbeddings(m, dir.path() / "v.emb", dir.path() / "ids.txt");
  const EmbeddingMatrix back = LoadEmbeddings(dir.path() / "v.emb", dir.path() / "ids.txt");
  ASSERT_EQ(back.ids(), m.ids());
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t d = 0; d < 5; ++d) EXPECT_EQ(back.row(i)[d], m.row(i)[d]);
  }
}

TEST(EmbeddingsTest, RejectsNonFinite) {
  EXPECT_THROW(EmbeddingMatrix({"a"}, 1, {std::nan("")}), std::invalid_argument);
}

TEST(BaseEncoderTest, ImportOnlyBaseRejectsUnknownIds) {
  auto base = BaseEncoder::FromEmbeddings(EmbeddingMatrix({"a"}, 2, {1, 0}));
  EXPECT_FALSE(base->text_capable());
  EXPECT_EQ(base->Embed(Fact::Make("a", "whatever")), (Vector{1, 0}));
  EXPECT_THROW(base->Embed(Fact::Make("b", "x")), LookupError);
}

TEST(BaseEncoderTest, TfidfBaseEmbedsUnseenText) {
  auto base = BaseEncoder::FromTfidf(MakeCorpus({{"a", "x y"}}));
  const Vector v = base->Embed(Fact::Make("manual-1", "y"));
  EXPECT_NEAR(Norm(v), 1.0, 1e-12);
}

class StackTest : public ::testing::Test {
 protected:
  std::shared_ptr<const BaseEncoder> base_ = BaseEncoder::FromEmbeddings(
      EmbeddingMatrix({"a", "b"}, 4, {1, 2, 3, 4, -1, 0.5, 2, 0}));
  Fact a_ = Fact::Make("a", "");
};

TEST_F(StackTest, IdentityAdaptersMatchFixedSide) {
  EncoderStack stack(base_, EncoderMode::kDual);
  EXPECT_EQ(stack.Encode(a_, EncodeSide::kQuery), stack.Encode(a_, EncodeSide::kFixed));
  EXPECT_EQ(stack.Encode(a_, EncodeSide::kPremise), stack.Encode(a_, EncodeSide::kFixed));
  EXPECT_TRUE(stack.query_adapter().is_identity());
}

TEST_F(StackTest, ScalarAdapterScales) {
  EncoderStack stack(base_, EncoderMode::kDual);
  Matrix w = Matrix::Identity(4);
  for (std::size_t i = 0; i < 4; ++i) w(i, i) = 2.0;
  stack.mutable_query_adapter().SetWeights(w);
  EXPECT_EQ(stack.Encode(a_, EncodeSide::kQuery), (Vector{2, 4, 6, 8}));
  EXPECT_EQ(stack.Encode(a_, EncodeSide::kFixed), (Vector{1, 2, 3, 4}));
}

TEST_F(StackTest, RandomAdapterMatchesDirectProduct) {
  Rng rng(5);
  EncoderStack stack(base_, EncoderMode::kDual);
  Matrix w(4, 4);
  for (auto& x : w.data()) x = rng.Normal();
  stack.mutable_premise_adapter().SetWeights(w);
  const Vector got = stack.Encode(a_, EncodeSide::kPremise);
  const double v[4] = {1, 2, 3, 4};
  for (std::size_t r = 0; r < 4; ++r) {
    double expect = 0.0;
    for (std::size_t c = 0; c < 4; ++c) expect += w(r, c) * v[c];
    EXPECT_NEAR(got[r], expect, 1e-12);
  }
}

TEST_F(StackTest, SiameseSharesOneAdapter) {
  EncoderStack stack(base_, EncoderMode::kSiamese);
  EXPECT_TRUE(stack.shares_adapter());
  stack.mutable_query_adapter().mutable_weights()(0, 1) = 3.0;
  EXPECT_EQ(stack.Encode(a_, EncodeSide::kQuery), stack.Encode(a_, EncodeSide::kPremise));
  EXPECT_NE(stack.Encode(a_, EncodeSide::kQuery), stack.Encode(a_, EncodeSide::kFixed));
}

TEST_F(StackTest, SingleModeFreezesPremiseAdapter) {
  EncoderStack stack(base_, EncoderMode::kSingle);
  EXPECT_FALSE(stack.premise_adapter().trainable());
  EXPECT_TRUE(stack.query_adapter().trainable());
}

TEST_F(StackTest, SaveLoadRoundTrip) {
  for (EncoderMode mode : {EncoderMode::kSingle, EncoderMode::kSiamese, EncoderMode::kDual}) {
    EncoderStack stack(base_, mode);
    stack.mutable_query_adapter().mutable_weights()(2, 3) = -0.125;
    if (mode == EncoderMode::kDual) stack.mutable_premise_adapter().mutable_weights()(0, 0) = 7;
    testing::TempDir dir;
    stack.Save(dir.path());
    const EncoderStack back = EncoderStack::Load(dir.path(), base_);
    EXPECT_EQ(back.mode(), mode);
    EXPECT_EQ(back.query_adapter(), stack.query_adapter());
    EXPECT_EQ(back.premise_adapter(), stack.premise_adapter());
  }
}

TEST(ModeTest, NamesRoundTrip) {
  for (EncoderMode m : {EncoderMode::kSingle, EncoderMode::kSiamese, EncoderMode::kDual}) {
    EXPECT_EQ(ParseMode(ModeName(m)), m);
  }
  EXPECT_THROW(ParseMode("triple"), std::invalid_argument);
}

}  // namespace
}  // namespace aeenc
