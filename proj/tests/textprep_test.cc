// Copyright 2026 The xmreid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xmreid/textprep.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace xmreid {
namespace {

using testing::error_of;

// Vocabulary w0..w{n-1}; token i embeds to (i+1) * ones.
EmbeddingTable numbered_table(int n, Eigen::Index dim) {
  EmbeddingTable t(dim);
  for (int i = 0; i < n; ++i) t.add("w" + std::to_string(i), Vector::Constant(dim, i + 1.0));
  return t;
}

Tokens numbered_tokens(int n) {
  Tokens t;
  for (int i = 0; i < n; ++i) t.push_back("w" + std::to_string(i));
  return t;
}

bool is_subsequence(const Tokens& sub, const Tokens& full) {
  std::size_t j = 0;
  for (const auto& tok : full) {
    if (j < sub.size() && sub[j] == tok) ++j;
  }
  return j == sub.size();
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("A short, slim woman."), (Tokens{"a", "short", "slim", "woman"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("ice-blue jeans"), (Tokens{"ice", "blue", "jeans"}));
  EXPECT_EQ(tokenize("She's  wearing 2 BAGS!!"), (Tokens{"she", "s", "wearing", "2", "bags"}));
  EXPECT_EQ(tokenize("caf\xc3\xa9 noir"), (Tokens{"caf\xc3\xa9", "noir"}));
}

TEST(ToTensor, ThreeTokensArePadded) {
  const EmbeddingTable table = numbered_table(100, 4);
  const DescriptionTensor t = to_tensor(numbered_tokens(3), table, 70);
  EXPECT_EQ(t.used, 3);
  EXPECT_EQ(t.length(), 70);
  EXPECT_EQ(t.dim(), 4);
  EXPECT_EQ(t.values.col(2), Vector::Constant(4, 3.0));
  EXPECT_TRUE(t.values.rightCols(67).isZero(0.0));
}

TEST(ToTensor, SeventyFiveTokensAreTruncated) {
  const EmbeddingTable table = numbered_table(100, 4);
  const DescriptionTensor t = to_tensor(numbered_tokens(75), table, 70);
  EXPECT_EQ(t.used, 70);
  EXPECT_EQ(t.values.col(69), Vector::Constant(4, 70.0));
}

TEST(ToTensor, OutOfVocabularySkippedBeforeTruncation) {
  const EmbeddingTable table = numbered_table(3, 2);
  const DescriptionTensor all_oov = to_tensor({"x", "y"}, table, 70);
  EXPECT_EQ(all_oov.used, 0);
  EXPECT_TRUE(all_oov.values.isZero(0.0));

  const DescriptionTensor t = to_tensor({"x", "w2", "y", "w0", "w1"}, table, 2);
  EXPECT_EQ(t.used, 2);
  EXPECT_EQ(t.values.col(0), Vector::Constant(2, 3.0));
  EXPECT_EQ(t.values.col(1), Vector::Constant(2, 1.0));
}

TEST(AugmentDrop, CapAndSubsequence) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Tokens in = numbered_tokens(5);
    const Tokens out = augment_drop(in, rng);
    EXPECT_GE(out.size(), 1u);
    EXPECT_TRUE(is_subsequence(out, in));
  }
  EXPECT_EQ(augment_drop({"only"}, rng), Tokens{"only"});
  EXPECT_EQ(augment_drop({}, rng), Tokens{});
}

TEST(AugmentDrop, ZeroDrawLeavesListIntact) {
  Rng rng(4);
  const Tokens in = numbered_tokens(40);
  int intact = 0;
  for (int i = 0; i < 1100; ++i) intact += augment_drop(in, rng) == in;
  // P(D = 0) = 1/11.
  EXPECT_NEAR(intact / 1100.0, 1.0 / 11.0, 0.03);
}

TEST(AugmentDrop, MeanRemovedCountIsFive) {
  Rng rng(5);
  const Tokens in = numbered_tokens(40);
  double removed = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) removed += static_cast<double>(40 - augment_drop(in, rng).size());
  EXPECT_NEAR(removed / draws, 5.0, 0.05);
}

TEST(AugmentSynonym, RankOneFractionIsTwoThirds) {
  Rng rng(6);
  int first = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) first += sample_synonym_rank(2, rng) == 0;
  EXPECT_NEAR(static_cast<double>(first) / draws, 2.0 / 3.0, 0.01);

  // Through the public op with certain replacement.
  const SynonymMap map{{"bag", {"satchel", "sack"}}};
  int satchel = 0;
  for (int i = 0; i < draws; ++i) satchel += augment_synonym({"bag"}, map, rng, 1.0)[0] == "satchel";
  EXPECT_NEAR(static_cast<double>(satchel) / draws, 2.0 / 3.0, 0.01);
}

TEST(AugmentSynonym, UnmappedTokensAndDeterminism) {
  const SynonymMap map{{"bag", {"satchel"}}};
  Rng a(7);
  EXPECT_EQ(augment_synonym({"red", "shirt"}, map, a, 1.0), (Tokens{"red", "shirt"}));
  Tokens many(200, "bag");
  Rng b(8), c(8);
  const Tokens x = augment_synonym(many, map, b);
  EXPECT_EQ(x, augment_synonym(many, map, c));
  const auto replaced = std::count(x.begin(), x.end(), "satchel");
  EXPECT_GT(replaced, 20);
  EXPECT_LT(replaced, 80);
}

TEST(AugmentGaussian, ZeroSigmaIsIdentity) {
  const DescriptionTensor t = to_tensor(numbered_tokens(5), numbered_table(10, 3), 8);
  Rng rng(9);
  EXPECT_EQ(augment_gaussian(t, 0.0, rng).values, t.values);
}

TEST(AugmentGaussian, StdAndPaddingUntouched) {
  const EmbeddingTable table(100);
  DescriptionTensor base;
  base.values = Matrix::Zero(100, 70);
  base.used = 50;
  Rng rng(10);
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;
  for (int i = 0; i < 200; ++i) {
    const DescriptionTensor noisy = augment_gaussian(base, 0.05, rng);
    ASSERT_TRUE(noisy.values.rightCols(20).isZero(0.0));
    const Matrix used = noisy.values.leftCols(50);
    sum += used.sum();
    sum_sq += used.squaredNorm();
    count += used.size();
  }
  ASSERT_EQ(count, 1000000);
  const double mean = sum / count;
  const double stddev = std::sqrt((sum_sq - count * mean * mean) / (count - 1));
  EXPECT_NEAR(stddev, 0.05, 0.001);
}

TEST(AugmentCorpus, FactorOneIsIdentity) {
  const Corpus corpus{{"a", 1, "red shirt blue jeans"}, {"b", 2, "black bag"}};
  const auto tokenized = tokenize_corpus(corpus);
  const auto out = augment_corpus(tokenized, {}, 1, Rng(1));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].tokens, tokenized[0].tokens);
  EXPECT_EQ(out[1].identity, "b");
  EXPECT_EQ(out[1].variant, 0u);
}

TEST(AugmentCorpus, FactorFiveHundredOverFullCorpus) {
  std::vector<TokenizedDescription> corpus;
  for (int i = 0; i < 2520; ++i) corpus.push_back({"p" + std::to_string(i / 2), 1 + i % 2, {"x"}});
  const auto out = augment_corpus(corpus, {}, 500, Rng(2));
  ASSERT_EQ(out.size(), 1260000u);
  for (const auto& item : out) {
    ASSERT_EQ(item.identity, corpus[item.source].identity);
    ASSERT_EQ(item.view, corpus[item.source].view);
  }
}

TEST(AugmentCorpus, LabelsPreservedAndOrderIndependent) {
  const Corpus corpus{{"a", 1, "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11"}, {"b", 2, "w1 w2 w3"}};
  const auto tokenized = tokenize_corpus(corpus);
  const auto full = augment_corpus(tokenized, {}, 6, Rng(3));
  ASSERT_EQ(full.size(), 12u);
  for (const auto& item : full) {
    EXPECT_EQ(item.identity, corpus[item.source].identity);
    EXPECT_EQ(item.view, corpus[item.source].view);
    EXPECT_TRUE(is_subsequence(item.tokens, tokenized[item.source].tokens));
  }
  EXPECT_EQ(augment_corpus(tokenized, {}, 6, Rng(3))[7].tokens, full[7].tokens);
}

TEST(AugmentCorpus, GaussianVariantsCarryNoise) {
  const EmbeddingTable table = numbered_table(10, 3);
  const std::vector<TokenizedDescription> corpus{{"a", 1, {"w1", "w2"}}};
  AugmentOptions options;
  options.method = AugmentMethod::kGaussian;
  const auto out = augment_corpus(corpus, options, 3, Rng(4));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_FALSE(out[0].noise_seed.has_value());
  ASSERT_TRUE(out[1].noise_seed.has_value());
  const DescriptionTensor clean = materialize(out[0], table, 5);
  const DescriptionTensor noisy = materialize(out[1], table, 5);
  EXPECT_EQ(noisy.values.rightCols(3), clean.values.rightCols(3));
  EXPECT_NE(noisy.values.leftCols(2), clean.values.leftCols(2));
  EXPECT_EQ(materialize(out[1], table, 5).values, noisy.values);
}

TEST(AugmentCorpus, Errors) {
  EXPECT_EQ(error_of([] { parse_augment_method("rotate"); }), Errc::kUnknownMethod);
  EXPECT_EQ(parse_augment_method("synonym"), AugmentMethod::kSynonym);
  EXPECT_EQ(error_of([] { augment_corpus({}, {}, 0, Rng(1)); }), Errc::kInvalidConfig);
  AugmentOptions options;
  options.method = AugmentMethod::kSynonym;
  EXPECT_EQ(error_of([&] { augment_corpus({}, options, 2, Rng(1)); }), Errc::kInvalidConfig);
}

TEST(ToCorpus, JoinsTokens) {
  const std::vector<TokenizedDescription> corpus{{"a", 2, {"red", "shirt"}}};
  const Corpus c = to_corpus(augment_corpus(corpus, {}, 1, Rng(1)));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].text, "red shirt");
  EXPECT_EQ(c[0].view, 2);
}

}  // namespace
}  // namespace xmreid
