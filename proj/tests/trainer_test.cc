// tests/trainer_test.cc

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

#include "ctcasr/trainer.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace ctcasr {
namespace {

Utterance<double> RandomUtterance(const std::string &id, int T, int D, std::vector<int> target,
                                  std::mt19937_64 &rng) {
  std::normal_distribution<double> n01;
  Utterance<double> u{id, Matrix<double>(T, D), std::move(target)};
  for (int i = 0; i < u.features.size(); ++i) u.features.data()[i] = n01(rng);
  return u;
}

NetConfig SmallNet(int in, int Q) {
  NetConfig cfg;
  cfg.input_dim = in;
  cfg.hidden_dim = 16;
  cfg.num_layers = 1;
  cfg.output_dim = Q;
  return cfg;
}

TEST(ApplyUpdate, HandComputedStep) {
  std::vector<double> w{1.0, -2.0};
  std::vector<double> v{0.5, 0.0};
  const std::vector<double> g{0.2, -0.4};
  ApplyUpdate<double>(w, v, g, 0.1, 0.9, 0.01);
  // v0 = 0.45 - 0.02 = 0.43, w0 = 1 + 0.43 - 0.001 = 1.429
  // v1 = 0 + 0.04 = 0.04,    w1 = -2 + 0.04 + 0.002 = -1.958
  EXPECT_EQ(v[0], 0.9 * 0.5 - 0.1 * 0.2);
  EXPECT_EQ(v[1], 0.9 * 0.0 - 0.1 * -0.4);
  EXPECT_EQ(w[0], 1.0 + v[0] - (0.1 * 0.01) * 1.0);
  EXPECT_EQ(w[1], -2.0 + v[1] - (0.1 * 0.01) * -2.0);
  EXPECT_NEAR(w[0], 1.429, 1e-15);
  EXPECT_NEAR(w[1], -1.958, 1e-15);
}

TEST(ClipGradient, GlobalNorm) {
  std::vector<double> small{0.3, 0.4};
  EXPECT_DOUBLE_EQ(ClipGradient<double>(small, 1.0, ClipMode::kGlobalNorm), 0.5);
  EXPECT_EQ(small, (std::vector<double>{0.3, 0.4}));
  std::vector<double> big{0.0, 4.0, 0.0};
  EXPECT_DOUBLE_EQ(ClipGradient<double>(big, 1.0, ClipMode::kGlobalNorm), 4.0);
  EXPECT_EQ(big, (std::vector<double>{0.0, 1.0, 0.0}));
  std::vector<double> mixed{2.4, -3.2};
  ClipGradient<double>(mixed, 1.0, ClipMode::kGlobalNorm);
  EXPECT_DOUBLE_EQ(mixed[0], 0.6);
  EXPECT_DOUBLE_EQ(mixed[1], -0.8);
}

TEST(ClipGradient, Elementwise) {
  std::vector<double> g{3.7, -0.2, -5.0};
  ClipGradient<double>(g, 1.0, ClipMode::kElementwise);
  EXPECT_EQ(g, (std::vector<double>{1.0, -0.2, -1.0}));
  EXPECT_EQ(ParseClipMode("elementwise"), ClipMode::kElementwise);
  EXPECT_THROW(ParseClipMode("max"), UsageError);
}

TrainState<double> FreshState(double lr) {
  TrainConfig cfg;
  cfg.learning_rate = lr;
  return TrainState<double>(NetParams<double>(SmallNet(2, 2)), cfg);
}

TEST(Schedule, ConstantWhileImproving) {
  TrainConfig cfg;
  auto st = FreshState(0.5);
  for (int e = 0; e < 10; ++e) EXPECT_TRUE(Schedule(st, 10.0 - e, cfg));
  EXPECT_EQ(st.lr, 0.5);
}

TEST(Schedule, DecayByFourAfterThreeFlatEpochs) {
  TrainConfig cfg;
  auto st = FreshState(0.5);
  Schedule(st, 1.0, cfg);
  Schedule(st, 1.0, cfg);
  Schedule(st, 1.5, cfg);
  EXPECT_EQ(st.lr, 0.5);
  Schedule(st, 1.0, cfg);
  EXPECT_EQ(st.lr, 0.125);
  for (int e = 0; e < 3; ++e) Schedule(st, 2.0, cfg);
  EXPECT_EQ(st.lr, 0.03125);
  EXPECT_EQ(st.best_dev, 1.0);
}

TEST(Schedule, PatienceOnePreset) {
  TrainConfig cfg;
  cfg.patience = 1;
  auto st = FreshState(0.5);
  Schedule(st, 1.0, cfg);
  Schedule(st, 1.0, cfg);
  EXPECT_EQ(st.lr, 0.125);
}

TEST(Schedule, KeepsBestParameters) {
  TrainConfig cfg;
  auto st = FreshState(0.5);
  st.params.data()[0] = 1.0;
  Schedule(st, 1.0, cfg);
  st.params.data()[0] = 2.0;
  Schedule(st, 3.0, cfg);
  EXPECT_EQ(st.best_params.data()[0], 1.0);
}

class TrainerData : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(17);
    const std::vector<std::vector<int>> targets{{1, 2}, {2, 3, 1}, {3}, {1, 1}, {2, 3}, {3, 2, 1, 2}};
    for (std::size_t i = 0; i < targets.size(); ++i) {
      data.push_back(RandomUtterance("u" + std::to_string(i), 9, 3, targets[i], rng));
    }
  }
  std::vector<Utterance<double>> data;
};

TEST_F(TrainerData, ZeroLearningRateLeavesParamsUnchanged) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.minibatch = 2;
  TrainState<double> st(InitParams<double>(SmallNet(3, 4), 1), cfg);
  const auto before = st.params.data();
  const auto stats = TrainEpoch<double>(st, data, cfg);
  EXPECT_EQ(stats.updates, 3);
  EXPECT_EQ(st.params.data(), before);
}

TEST_F(TrainerData, TinyClipBoundsTheStep) {
  TrainConfig cfg;
  cfg.clip = 1e-8;
  cfg.minibatch = 6;
  cfg.l2 = 1e-3;
  TrainState<double> st(InitParams<double>(SmallNet(3, 4), 1), cfg);
  const auto before = st.params.data();
  TrainEpoch<double>(st, data, cfg);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double step = st.params.data()[i] - before[i];
    EXPECT_LE(std::abs(step), cfg.learning_rate * 1e-8 + cfg.learning_rate * cfg.l2 * std::abs(before[i]) + 1e-18);
  }
}

TEST_F(TrainerData, BatchGradientIsSumOfUtteranceGradients) {
  TrainConfig cfg;
  const auto params = InitParams<double>(SmallNet(3, 4), 2);
  const std::vector<const Utterance<double> *> both{&data[0], &data[1]};
  const auto g2 = ComputeBatchGradient<double>(params, both, cfg);
  const auto a = ComputeUtteranceGradient(params, data[0], cfg);
  const auto b = ComputeUtteranceGradient(params, data[1], cfg);
  EXPECT_EQ(g2.frames, 18);
  EXPECT_NEAR(g2.log_loss, a.log_loss + b.log_loss, 1e-12);
  for (std::size_t i = 0; i < params.size(); ++i) {
    EXPECT_NEAR(g2.grad.data()[i], a.grad.data()[i] + b.grad.data()[i], 1e-12);
  }
  cfg.threads = 2;
  const auto threaded = ComputeBatchGradient<double>(params, both, cfg);
  for (std::size_t i = 0; i < params.size(); ++i) {
    EXPECT_NEAR(threaded.grad.data()[i], g2.grad.data()[i], 1e-12);
  }
}

TEST_F(TrainerData, InfeasibleUtterancesAreSkipped) {
  std::mt19937_64 rng(1);
  data.push_back(RandomUtterance("short", 2, 3, {1, 1}, rng));
  TrainConfig cfg;
  cfg.minibatch = 4;
  TrainState<double> st(InitParams<double>(SmallNet(3, 4), 1), cfg);
  const auto stats = TrainEpoch<double>(st, data, cfg);
  EXPECT_EQ(stats.skipped, 1);
  EXPECT_EQ(stats.frames, 54);
}

TEST_F(TrainerData, DeterministicGivenSeed) {
  TrainConfig cfg;
  cfg.minibatch = 2;
  auto run = [&] {
    TrainState<double> st(InitParams<double>(SmallNet(3, 4), 5), cfg);
    for (int e = 0; e < 3; ++e) TrainEpoch<double>(st, data, cfg);
    return st.params.data();
  };
  EXPECT_EQ(run(), run());
}

TEST_F(TrainerData, EmptyManifestAndBadConfig) {
  TrainConfig cfg;
  TrainState<double> st(InitParams<double>(SmallNet(3, 4), 1), cfg);
  EXPECT_THROW(TrainEpoch<double>(st, {}, cfg), DataError);
  cfg.minibatch = 0;
  EXPECT_THROW(TrainEpoch<double>(st, data, cfg), UsageError);
  cfg.minibatch = 4;
  cfg.smoothing = 1.0;
  EXPECT_THROW(cfg.Validate(), UsageError);
}

TEST_F(TrainerData, PolishWithZeroScaleIsNoOp) {
  TrainConfig cfg;
  cfg.polish_lr_scale = 0.0;
  TrainState<double> st(InitParams<double>(SmallNet(3, 4), 1), cfg);
  const auto before = st.params.data();
  const auto ps = Polish<double>(st, data, data, cfg);
  EXPECT_EQ(st.params.data(), before);
  EXPECT_EQ(ps.best_dev, ps.start_dev);
  EXPECT_EQ(st.lr, cfg.learning_rate);
}

TEST_F(TrainerData, PolishNeverDegradesDev) {
  TrainConfig cfg;
  cfg.minibatch = 2;
  TrainState<double> st(InitParams<double>(SmallNet(3, 4), 1), cfg);
  for (int e = 0; e < 5; ++e) TrainEpoch<double>(st, data, cfg);
  const double before = EvaluateLoss<double>(st.params, data);
  cfg.polish_lr_scale = 50.0;
  Polish<double>(st, std::span<const Utterance<double>>(data).first(3), data, cfg);
  EXPECT_LE(EvaluateLoss<double>(st.params, data), before * 1.01);
}

// A single utterance driven towards one alignment.  Under the literal
// transition weights no alignment costs less than its prior, so the bound is
// the cheapest alignment prior per frame plus 0.1 nats.
TEST(Overfit, SingleUtterance) {
  std::mt19937_64 rng(3);
  const int T = 12;
  auto u = RandomUtterance("solo", T, 4, {1, 2, 3}, rng);
  TrainConfig cfg;
  cfg.minibatch = 1;
  NetConfig net = SmallNet(4, 4);
  net.hidden_dim = 32;
  TrainState<double> st(InitParams<double>(net, 7), cfg);
  std::vector<double> losses;
  const std::vector<Utterance<double>> one{u};
  for (int step = 0; step < 200; ++step) {
    TrainEpoch<double>(st, one, cfg);
    losses.push_back(EvaluateLoss<double>(st.params, one));
  }
  // (T - 3) self loops and one initial prior at 0.5, two advances at 0.25.
  const double prior_cost = (T + 2) * std::log(2.0) / T;
  EXPECT_LT(losses.back(), prior_cost + 0.1) << losses.front();
  // Smoothed targets settle slightly off the exact minimum.
  for (std::size_t k = 60; k + 20 < losses.size(); k += 20) {
    EXPECT_LE(losses[k + 20], losses[k] + 1e-4) << k;
  }
}

TEST(RareUnit, PosteriorNeverCollapses) {
  std::mt19937_64 rng(4);
  std::vector<Utterance<double>> data;
  std::uniform_int_distribution<int> common(1, 3);
  for (int i = 0; i < 40; ++i) {
    std::vector<int> target;
    for (int k = 0; k < 3; ++k) target.push_back(common(rng));
    if (i == 0) target.push_back(4);
    data.push_back(RandomUtterance("r" + std::to_string(i), 10, 3, target, rng));
  }
  TrainConfig cfg;
  cfg.minibatch = 8;
  TrainState<double> st(InitParams<double>(SmallNet(3, 5), 1), cfg);
  for (int e = 0; e < 8; ++e) {
    const auto stats = TrainEpoch<double>(st, data, cfg);
    EXPECT_GE(stats.mean_posterior.minCoeff(), 1e-6) << "epoch " << e;
  }
}

}  // namespace
}  // namespace ctcasr
