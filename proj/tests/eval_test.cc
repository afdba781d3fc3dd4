// tests/eval_test.cc

// Copyright 2026  The ctcasr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ctcasr/eval.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_util.hpp"

namespace ctcasr {
namespace {

TEST(Wer, Examples) {
  EXPECT_EQ(Wer("a b c", "a b c").error_rate(), 0.0);
  const auto sub = Wer("a b c", "a x c");
  EXPECT_NEAR(sub.error_rate(), 100.0 / 3.0, 1e-12);
  EXPECT_EQ(sub.total.substitutions, 1);
  const auto ins = Wer("a b", "a b c");
  EXPECT_EQ(ins.error_rate(), 50.0);
  EXPECT_EQ(ins.total.insertions, 1);
  const auto del = Wer("a b c d", "a d");
  EXPECT_EQ(del.total.deletions, 2);
  EXPECT_EQ(del.error_rate(), 50.0);
}

TEST(Wer, PrefersSubstitutionOverInsertionDeletionPair) {
  const auto r = Wer("a b", "c d");
  EXPECT_EQ(r.total.substitutions, 2);
  EXPECT_EQ(r.total.insertions, 0);
  EXPECT_EQ(r.total.deletions, 0);
}

TEST(Wer, NormalizesBeforeScoring) {
  EXPECT_EQ(Wer("Hello,  World", "hello world").error_rate(), 0.0);
}

TEST(Wer, CharacterModeCountsSpaces) {
  const auto r = Wer("ab cd", "abcd", TokenMode::kChar);
  EXPECT_EQ(r.total.ref_tokens, 5);
  EXPECT_EQ(r.total.deletions, 1);
}

TEST(Wer, EmptyReferenceRejected) {
  EXPECT_THROW(Wer("", "a"), DataError);
  EXPECT_THROW(Wer(" ,, ", "a"), DataError);
  EXPECT_EQ(Wer("a b", "").total.deletions, 2);
}

TEST(Wer, SelfIsZero) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::string t = testing::RandomText(rng);
    EXPECT_EQ(Wer(t, t).error_rate(), 0.0);
    EXPECT_EQ(Wer(t, t, TokenMode::kChar).error_rate(), 0.0);
  }
}

TEST(Align, TriangleInequality) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto x = Tokenize(testing::RandomText(rng), TokenMode::kChar);
    const auto y = Tokenize(testing::RandomText(rng), TokenMode::kChar);
    const auto z = Tokenize(testing::RandomText(rng), TokenMode::kChar);
    const long xz = Align(x, z).errors();
    EXPECT_LE(xz, Align(x, y).errors() + Align(y, z).errors());
    EXPECT_EQ(Align(x, y).errors(), Align(y, x).errors());
  }
}

TEST(ScoreReport, CorpusRateIsPooled) {
  ScoreReport r;
  r.Add("u1", "a", "b");              // 1 / 1
  r.Add("u2", "a b c d e f g h i j", "a b c d e f g h i j");  // 0 / 10
  EXPECT_NEAR(r.error_rate(), 100.0 / 11.0, 1e-12);
  ASSERT_EQ(r.utterances.size(), 2u);
  EXPECT_EQ(r.utterances[0].counts.rate(), 100.0);
}

TEST(ScoreReport, JsonAndTable) {
  ScoreReport r;
  r.Add("u1", "a b c", "a x c");
  const auto j = r.ToJson();
  EXPECT_EQ(j["token_mode"], "word");
  EXPECT_EQ(j["total"]["substitutions"], 1);
  EXPECT_EQ(j["utterances"][0]["id"], "u1");
  std::ostringstream os;
  r.PrintTable(os);
  EXPECT_NE(os.str().find("WER"), std::string::npos);
  EXPECT_NE(os.str().find("33.33"), std::string::npos);
}

}  // namespace
}  // namespace ctcasr
