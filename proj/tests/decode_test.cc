// tests/decode_test.cc

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

#include "ctcasr/decode.hpp"

#include <gtest/gtest.h>

#include <random>

#include "ctcasr/eval.hpp"
#include "test_util.hpp"

namespace ctcasr {
namespace {

Inventory HelloInventory() {
  const std::vector<std::string> corpus{"hello"};
  return BuildInventory(corpus, Scheme::kCapitalInitial);
}

/// Peaky grid whose per-frame argmax follows `frames`.
PosteriorGrid<double> GridFor(const std::vector<int> &frames, int Q) {
  Matrix<double> m = Matrix<double>::Constant(static_cast<Eigen::Index>(frames.size()), Q, 0.1 / Q);
  for (std::size_t t = 0; t < frames.size(); ++t) m(static_cast<Eigen::Index>(t), frames[t]) += 0.9;
  return PosteriorGrid<double>(m);
}

TEST(Greedy, HelloFromFrames) {
  const Inventory inv = HelloInventory();
  auto id = [&](const char *s) { return *inv.Find(s); };
  const std::vector<int> frames{0, id("H"), id("H"), 0, id("e"), id("ll"), id("o"), 0};
  const auto res = GreedyDecode(GridFor(frames, inv.size()), inv);
  EXPECT_EQ(res.text, "hello");
  EXPECT_EQ(res.units, (std::vector<int>{id("H"), id("e"), id("ll"), id("o")}));
}

TEST(Greedy, AllBlankIsEmpty) {
  const Inventory inv = HelloInventory();
  const auto res = GreedyDecode(GridFor(std::vector<int>(5, 0), inv.size()), inv);
  EXPECT_EQ(res.text, "");
  EXPECT_TRUE(res.units.empty());
}

TEST(Greedy, InteriorBlankBetweenRepeats) {
  const Inventory inv = HelloInventory();
  const int l = *inv.Find("l");
  const std::vector<int> frames{l, l, 0, l};
  const auto grid = GridFor(frames, inv.size());
  // The blank separates a genuine repeat when runs merge before blanks drop.
  EXPECT_EQ(GreedyDecode(grid, inv, CollapseMode::kMergeRunsFirst).units, (std::vector<int>{l, l}));
  // Blanks dropped first: every repeat compresses.
  EXPECT_EQ(GreedyDecode(grid, inv).units, (std::vector<int>{l}));
}

TEST(Greedy, TiesGoToLowestId) {
  const Inventory inv = HelloInventory();
  Matrix<double> m(1, inv.size());
  m.setConstant(0.0);
  m(0, 2) = 0.5;
  m(0, 3) = 0.5;
  EXPECT_EQ(GreedyDecode(PosteriorGrid<double>(m), inv).units, (std::vector<int>{2}));
  m.setConstant(1.0 / inv.size());
  EXPECT_TRUE(GreedyDecode(PosteriorGrid<double>(m), inv).units.empty());
}

TEST(Greedy, MatchesFourStepOracle) {
  const Inventory inv = BuildInventory(testing::AlphabetCorpus(), Scheme::kCapitalInitial);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 30);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto probs = testing::RandomGrid(len(rng), inv.size(), rng);
    const auto res = GreedyDecode(PosteriorGrid<double>(probs), inv);
    ASSERT_EQ(res.units, testing::FourStepOracle(probs));
    EXPECT_EQ(res.text.find("  "), std::string::npos);
    if (!res.text.empty()) EXPECT_NE(res.text.front(), ' ');
  }
}

Inventory TinyInventory() {
  return Inventory(Scheme::kCapitalInitial,
                   {{0, "A", UnitKind::kInitialLetter}, {0, "a", UnitKind::kInteriorLetter}});
}

TEST(Beam, ExactOnSmallGrids) {
  const Inventory inv = TinyInventory();
  std::mt19937_64 rng(2);
  BeamOptions opt;
  opt.width = 1000;
  opt.lm_weight = 0.0;
  opt.insertion_bonus = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int T = 1 + trial % 4;
    const int Q = 2 + trial % 2;
    const auto probs = testing::RandomGrid(T, Q, rng);
    const auto [best, mass] = testing::BruteForceBestLabeling(probs);
    const auto res = BeamDecode(PosteriorGrid<double>(probs), inv, nullptr, opt);
    ASSERT_EQ(res.units, best) << trial;
    EXPECT_NEAR(res.score, std::log(mass), 1e-10);
  }
}

// Pruned beams are not nested across widths, so step-to-step monotonicity
// can fail on a few grids; the unpruned score bounds every width.
TEST(Beam, WiderBeamsScoreAtLeastAsWell) {
  const Inventory inv = BuildInventory(std::vector<std::string>{"ab ba"}, Scheme::kCapitalInitial);
  std::mt19937_64 rng(3);
  BeamOptions opt;
  opt.lm_weight = 0.0;
  opt.insertion_bonus = 0.0;
  int monotone = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const auto probs = testing::RandomGrid(6, inv.size(), rng);
    std::vector<double> scores;
    for (int w : {1, 2, 3, 5, 8, 16, 64, 1 << 20}) {
      opt.width = w;
      scores.push_back(BeamDecode(PosteriorGrid<double>(probs), inv, nullptr, opt).score);
    }
    for (double s : scores) EXPECT_LE(s, scores.back() + 1e-12) << trial;
    bool ok = true;
    for (std::size_t i = 1; i < scores.size(); ++i) ok = ok && scores[i] >= scores[i - 1] - 1e-12;
    monotone += ok;
  }
  EXPECT_GE(monotone, trials * 9 / 10);
}

TEST(Beam, LanguageModelOverridesAcousticallyLikelyError) {
  const std::vector<std::string> texts{"ab", "ba", "aa", "bb"};
  const Inventory inv = BuildInventory(texts, Scheme::kCapitalInitial);
  auto id = [&](const char *s) { return *inv.Find(s); };
  std::vector<std::vector<int>> corpus(20, std::vector<int>{id("A"), id("b")});
  const auto lm = CharNGram::Train(corpus, inv.size(), 3);
  Matrix<double> m = Matrix<double>::Constant(2, inv.size(), 0.01);
  m(0, id("A")) = 0.9;
  m(1, id("a")) = 0.5;
  m(1, id("b")) = 0.4;
  for (int t = 0; t < 2; ++t) m.row(t) /= m.row(t).sum();
  const PosteriorGrid<double> grid(m);
  const auto greedy = GreedyDecode(grid, inv);
  EXPECT_EQ(greedy.text, "aa");
  BeamOptions opt;
  opt.nbest = 50;
  const auto beam = BeamDecode(grid, inv, &lm, opt);
  EXPECT_EQ(beam.text, "ab");
  const auto it = std::find_if(beam.nbest.begin(), beam.nbest.end(),
                               [&](const Hypothesis &h) { return h.prefix == greedy.units; });
  ASSERT_NE(it, beam.nbest.end());
  EXPECT_GT(beam.score, it->score);
}

TEST(Beam, NbestAndMassBookkeeping) {
  const Inventory inv = BuildInventory(testing::AlphabetCorpus(), Scheme::kCapitalInitial);
  std::mt19937_64 rng(4);
  BeamOptions opt;
  opt.width = 16;
  opt.nbest = 10;
  const auto res = BeamDecode(PosteriorGrid<double>(testing::RandomGrid(12, inv.size(), rng)),
                              inv, nullptr, opt);
  ASSERT_EQ(res.nbest.size(), 10u);
  EXPECT_EQ(res.nbest.front().prefix, res.units);
  std::set<std::vector<int>> unique;
  for (std::size_t i = 0; i < res.nbest.size(); ++i) {
    EXPECT_LE(res.nbest[i].total(), 1e-12);
    unique.insert(res.nbest[i].prefix);
    if (i) EXPECT_GE(res.nbest[i - 1].score, res.nbest[i].score);
  }
  EXPECT_EQ(unique.size(), res.nbest.size());
}

TEST(Beam, Errors) {
  const Inventory inv = TinyInventory();
  const PosteriorGrid<double> grid(Matrix<double>::Constant(2, 3, 1.0 / 3));
  BeamOptions opt;
  opt.width = 0;
  EXPECT_THROW(BeamDecode(grid, inv, nullptr, opt), UsageError);
  opt.width = 4;
  opt.lm_weight = -1;
  EXPECT_THROW(BeamDecode(grid, inv, nullptr, opt), UsageError);
  opt.lm_weight = 1;
  const std::vector<std::vector<int>> corpus{{1}};
  const auto lm = CharNGram::Train(corpus, 5, 2);
  EXPECT_THROW(BeamDecode(grid, inv, &lm, opt), DataError);
}

TEST(CorruptUnits, Rates) {
  std::mt19937_64 rng(5);
  std::vector<int> ids(10000);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 1 + static_cast<int>(i % 7);
  EXPECT_EQ(CorruptUnits(ids, 0.0, 8, rng), ids);
  const auto all = CorruptUnits(ids, 1.0, 8, rng);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_NE(all[i], ids[i]);
    EXPECT_GE(all[i], 1);
    EXPECT_LT(all[i], 8);
  }
  const auto some = CorruptUnits(ids, 0.2, 8, rng);
  long changed = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) changed += some[i] != ids[i];
  EXPECT_NEAR(changed / 10000.0, 0.2, 0.02);
}

TEST(Ctc2, DataPreparationSkips) {
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<std::vector<int>> first{{}, {1}, {1, 2}};
  const std::vector<std::vector<int>> refs{{1}, {1, 1, 1}, {2, 1}};
  const auto data = MakeCtc2Data(ids, first, refs, 3, 3);
  EXPECT_EQ(data.skipped_empty, 1);
  EXPECT_EQ(data.skipped_short, 1);
  ASSERT_EQ(data.utterances.size(), 1u);
  EXPECT_EQ(data.utterances[0].features.rows(), 6);
  EXPECT_THROW(MakeCtc2Data(ids, first, std::vector<std::vector<int>>{}, 3, 3), DataError);
}

struct Ctc2Fixture {
  Inventory inv;
  std::vector<std::vector<int>> train_refs;
  std::vector<std::vector<int>> test_refs;
  std::vector<std::string> test_texts;
};

Ctc2Fixture MakeCtc2Fixture() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> word_len(3, 5);
  std::uniform_int_distribution<int> letter(0, 7);
  std::vector<std::string> lexicon;
  for (int i = 0; i < 12; ++i) {
    std::string w;
    const int L = word_len(rng);
    for (int k = 0; k < L; ++k) w += static_cast<char>('a' + letter(rng));
    lexicon.push_back(w);
  }
  std::uniform_int_distribution<int> nwords(1, 4);
  std::uniform_int_distribution<std::size_t> pick(0, lexicon.size() - 1);
  std::vector<std::string> texts;
  for (int i = 0; i < 460; ++i) {
    std::string t;
    const int W = nwords(rng);
    for (int w = 0; w < W; ++w) {
      if (w) t += ' ';
      t += lexicon[pick(rng)];
    }
    texts.push_back(t);
  }
  Ctc2Fixture f;
  f.inv = BuildInventory(texts, Scheme::kCapitalInitial);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto ids = Encode(texts[i], f.inv).ids;
    if (i < 400) {
      f.train_refs.push_back(ids);
    } else {
      f.test_refs.push_back(ids);
      f.test_texts.push_back(texts[i]);
    }
  }
  return f;
}

double CorpusCer(const std::vector<std::string> &refs, const std::vector<std::string> &hyps) {
  ScoreReport r;
  r.mode = TokenMode::kChar;
  for (std::size_t i = 0; i < refs.size(); ++i) r.Add(std::to_string(i), refs[i], hyps[i]);
  return r.error_rate();
}

Ctc2Options SmallCtc2Options(int epochs) {
  Ctc2Options opt;
  opt.net.hidden_dim = 48;
  opt.net.num_layers = 1;
  opt.train.minibatch = 8;
  opt.train.learning_rate = 0.1;
  opt.epochs = epochs;
  return opt;
}

TEST(Ctc2, IdentityTaskIsNearCopy) {
  const auto f = MakeCtc2Fixture();
  std::vector<std::string> ids(f.train_refs.size(), "u");
  const auto data = MakeCtc2Data(ids, f.train_refs, f.train_refs, f.inv.size(), 3);
  const auto params = Ctc2Train<double>(data.utterances, {}, f.inv.size(), SmallCtc2Options(15));
  std::vector<std::string> hyps;
  for (const auto &ref : f.test_refs) {
    DecodeResult first;
    first.units = ref;
    first.text = DecodeIds(ref, f.inv);
    hyps.push_back(Ctc2Apply(params, first, f.inv).text);
  }
  EXPECT_LT(CorpusCer(f.test_texts, hyps), 1.0);
}

TEST(Ctc2, ReducesSubstitutionNoise) {
  const auto f = MakeCtc2Fixture();
  std::mt19937_64 rng(7);
  std::vector<std::vector<int>> noisy;
  for (const auto &r : f.train_refs) noisy.push_back(CorruptUnits(r, 0.2, f.inv.size(), rng));
  std::vector<std::string> ids(f.train_refs.size(), "u");
  const auto data = MakeCtc2Data(ids, noisy, f.train_refs, f.inv.size(), 3);
  const auto params = Ctc2Train<double>(data.utterances, {}, f.inv.size(), SmallCtc2Options(20));
  std::vector<std::string> before;
  std::vector<std::string> after;
  for (const auto &ref : f.test_refs) {
    DecodeResult first;
    first.units = CorruptUnits(ref, 0.2, f.inv.size(), rng);
    first.text = DecodeIds(first.units, f.inv);
    before.push_back(first.text);
    after.push_back(Ctc2Apply(params, first, f.inv).text);
  }
  EXPECT_LT(CorpusCer(f.test_texts, after), CorpusCer(f.test_texts, before));
}

TEST(Ctc2, EmptyFirstPassPassesThrough) {
  const auto f = MakeCtc2Fixture();
  NetConfig cfg;
  cfg.input_dim = cfg.output_dim = f.inv.size();
  cfg.hidden_dim = 64;
  const auto params = InitParams<double>(cfg, 1);
  const DecodeResult empty;
  EXPECT_TRUE(Ctc2Apply(params, empty, f.inv).units.empty());
}

}  // namespace
}  // namespace ctcasr
