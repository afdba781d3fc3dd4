// ctcasr/trainer.hpp

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

// Minibatch SGD with momentum and L2 for CTC-trained ReLU-RNNs.
//
// One update:
//   g  = (sum over the minibatch of d(-log L)/d(params)) / frames in batch
//   g  = clip(g)
//   v  = momentum * v - lr * g
//   w += v - lr * l2 * w
// The CTC error signal uses the smoothed posteriors
//   (1 - m) * gamma + m / Q
// so that no unit is driven all the way to zero probability.

#ifndef CTCASR_TRAINER_HPP_
#define CTCASR_TRAINER_HPP_

#include "ctcasr/common.hpp"
#include "ctcasr/lattice.hpp"
#include "ctcasr/net.hpp"

#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace ctcasr {

enum class ClipMode { kGlobalNorm, kElementwise };

inline ClipMode ParseClipMode(std::string_view s) {
  if (s == "global-norm") return ClipMode::kGlobalNorm;
  if (s == "elementwise") return ClipMode::kElementwise;
  throw UsageError(StrCat("unknown clip mode '", s, "'"));
}

inline std::string_view ClipModeName(ClipMode m) {
  return m == ClipMode::kGlobalNorm ? "global-norm" : "elementwise";
}

struct TrainConfig {
  int minibatch = 32;
  double learning_rate = 0.5;
  double momentum = 0.9;
  double l2 = 1e-6;
  double clip = 1.0;
  ClipMode clip_mode = ClipMode::kGlobalNorm;
  double smoothing = 0.01;
  double lr_decay = 4.0;
  int patience = 3;
  int max_epochs = 30;
  double polish_lr_scale = 0.1;
  int polish_epochs = 2;
  bool shuffle = true;
  int threads = 1;
  std::uint64_t seed = 1;
  TransitionConfig transitions;

  void Validate() const {
    if (minibatch < 1 || minibatch > 1024) {
      throw UsageError(StrCat("minibatch must be in [1, 1024], got ", minibatch));
    }
    if (!(learning_rate >= 0.0)) throw UsageError("learning rate must be >= 0");
    if (!(clip > 0.0)) throw UsageError("clip threshold must be > 0");
    if (!(smoothing >= 0.0 && smoothing < 1.0)) {
      throw UsageError("smoothing mass must be in [0, 1)");
    }
    if (!(lr_decay >= 1.0)) throw UsageError("lr decay factor must be >= 1");
    if (patience < 1) throw UsageError("patience must be >= 1");
    if (threads < 1) throw UsageError("threads must be >= 1");
  }
};

/// One training example: network input frames and the target unit ids.
template <typename Real>
struct Utterance {
  std::string id;
  Matrix<Real> features;
  std::vector<int> target;
};

template <typename Real>
bool Feasible(const Utterance<Real> &u) {
  return !u.target.empty() && u.features.rows() >= MinimumFrames(u.target);
}

/// Clips in place and returns the global L2 norm before clipping.
template <typename Real>
double ClipGradient(std::span<Real> grad, double threshold, ClipMode mode) {
  double sq = 0.0;
  for (Real g : grad) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (mode == ClipMode::kGlobalNorm) {
    if (norm > threshold) {
      const auto scale = static_cast<Real>(threshold / norm);
      for (Real &g : grad) g *= scale;
    }
  } else {
    const auto t = static_cast<Real>(threshold);
    for (Real &g : grad) g = std::clamp(g, -t, t);
  }
  return norm;
}

/// v = momentum * v - lr * g;  w += v - lr * l2 * w.
template <typename Real>
void ApplyUpdate(std::span<Real> params, std::span<Real> velocity,
                 std::span<const Real> grad, double lr, double momentum, double l2) {
  const auto r_lr = static_cast<Real>(lr);
  const auto r_mu = static_cast<Real>(momentum);
  const auto r_decay = static_cast<Real>(lr * l2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = r_mu * velocity[i] - r_lr * grad[i];
    params[i] += velocity[i] - r_decay * params[i];
  }
}

template <typename Real>
struct UtteranceGradient {
  ParamGrad<Real> grad;
  double log_loss = 0.0;
  int frames = 0;
  /// Per-unit posteriors summed over frames (diagnostics).
  Vector<double> posterior_mass;
};

/// Forward, CTC alignment with smoothed posteriors, and backward for one
/// utterance.
template <typename Real>
UtteranceGradient<Real> ComputeUtteranceGradient(const NetParams<Real> &params,
                                                 const Utterance<Real> &utt,
                                                 const TrainConfig &cfg) {
  auto fwd = Forward(params, utt.features);
  const Lattice lat(utt.target, static_cast<int>(utt.features.rows()), cfg.transitions, utt.id);
  CtcResult ctc;
  try {
    ctc = ForwardBackward(lat, fwd.grid);
  } catch (const NumericalError &e) {
    throw NumericalError(StrCat(e.what(), " (utterance ", utt.id, ")"));
  }
  if (!std::isfinite(ctc.log_loss)) {
    throw NumericalError(StrCat("non-finite loss for utterance ", utt.id));
  }
  const Matrix<double> target = SmoothGamma(lat, ctc.gamma, fwd.grid.units(), cfg.smoothing);
  const Matrix<double> err = fwd.grid.matrix().template cast<double>() - target;
  UtteranceGradient<Real> out{Backward(params, fwd.cache, err), ctc.log_loss,
                              static_cast<int>(utt.features.rows()),
                              fwd.grid.matrix().template cast<double>().colwise().sum().transpose()};
  return out;
}

template <typename Real>
struct BatchGradient {
  ParamGrad<Real> grad;  // summed, not yet normalized
  double log_loss = 0.0;
  long frames = 0;
  int skipped = 0;
  Vector<double> posterior_mass;
};

/// Sums per-utterance gradients over `batch`; infeasible utterances are
/// skipped and counted.  With threads > 1 utterances are split across workers
/// and the partial sums are added in worker order.
template <typename Real>
BatchGradient<Real> ComputeBatchGradient(const NetParams<Real> &params,
                                         std::span<const Utterance<Real> *const> batch,
                                         const TrainConfig &cfg) {
  const int workers = std::max(1, std::min<int>(cfg.threads, static_cast<int>(batch.size())));
  std::vector<BatchGradient<Real>> partial(static_cast<std::size_t>(workers));
  for (auto &p : partial) {
    p.grad = ParamGrad<Real>(params.config());
    p.posterior_mass = Vector<double>::Zero(params.config().output_dim);
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    auto &acc = partial[static_cast<std::size_t>(w)];
    try {
      for (std::size_t i = static_cast<std::size_t>(w); i < batch.size(); i += static_cast<std::size_t>(workers)) {
        const Utterance<Real> &u = *batch[i];
        if (!Feasible(u)) {
          ++acc.skipped;
          continue;
        }
        auto ug = ComputeUtteranceGradient(params, u, cfg);
        auto &dst = acc.grad.data();
        const auto &src = ug.grad.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        acc.log_loss += ug.log_loss;
        acc.frames += ug.frames;
        acc.posterior_mass += ug.posterior_mass;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  BatchGradient<Real> total = std::move(partial[0]);
  for (std::size_t w = 1; w < partial.size(); ++w) {
    auto &dst = total.grad.data();
    const auto &src = partial[w].grad.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    total.log_loss += partial[w].log_loss;
    total.frames += partial[w].frames;
    total.skipped += partial[w].skipped;
    total.posterior_mass += partial[w].posterior_mass;
  }
  return total;
}

template <typename Real>
struct TrainState {
  NetParams<Real> params;
  std::vector<Real> velocity;
  int epoch = 0;
  double best_dev = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  double lr = 0.5;
  NetParams<Real> best_params;
  std::mt19937_64 rng;

  TrainState() = default;
  TrainState(NetParams<Real> p, const TrainConfig &cfg)
      : params(std::move(p)), velocity(params.size(), Real(0)), lr(cfg.learning_rate),
        best_params(params), rng(cfg.seed) {}
};

struct EpochStats {
  int epoch = 0;
  double loss_per_frame = 0.0;
  long frames = 0;
  int skipped = 0;
  int updates = 0;
  double lr = 0.0;
  /// Per-unit mean posterior over all trained frames.
  Vector<double> mean_posterior;
};

/// One pass over `data` in shuffled minibatches.
template <typename Real>
EpochStats TrainEpoch(TrainState<Real> &state, std::span<const Utterance<Real>> data,
                      const TrainConfig &cfg) {
  cfg.Validate();
  if (data.empty()) throw DataError("empty training manifest");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  if (cfg.shuffle) std::shuffle(order.begin(), order.end(), state.rng);

  EpochStats st;
  st.lr = state.lr;
  st.mean_posterior = Vector<double>::Zero(state.params.config().output_dim);
  double loss = 0.0;
  std::vector<const Utterance<Real> *> batch;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch)) {
    batch.clear();
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
    for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);
    auto bg = ComputeBatchGradient<Real>(state.params, batch, cfg);
    st.skipped += bg.skipped;
    if (bg.frames == 0) continue;
    loss += bg.log_loss;
    st.frames += bg.frames;
    st.mean_posterior += bg.posterior_mass;
    auto &g = bg.grad.data();
    const auto inv_frames = static_cast<Real>(1.0 / static_cast<double>(bg.frames));
    for (Real &v : g) v *= inv_frames;
    ClipGradient<Real>(g, cfg.clip, cfg.clip_mode);
    ApplyUpdate<Real>(state.params.data(), state.velocity, g, state.lr, cfg.momentum, cfg.l2);
    ++st.updates;
  }
  if (!state.params.AllFinite()) {
    throw NumericalError(StrCat("parameters became non-finite in epoch ", state.epoch + 1));
  }
  ++state.epoch;
  st.epoch = state.epoch;
  st.loss_per_frame = st.frames ? loss / static_cast<double>(st.frames) : 0.0;
  if (st.frames) st.mean_posterior /= static_cast<double>(st.frames);
  return st;
}

/// Mean per-frame CTC log-loss over the feasible utterances of `data`.
template <typename Real>
double EvaluateLoss(const NetParams<Real> &params, std::span<const Utterance<Real>> data,
                    const TransitionConfig &transitions = {}) {
  double loss = 0.0;
  long frames = 0;
  for (const auto &u : data) {
    if (!Feasible(u)) continue;
    auto fwd = Forward(params, u.features);
    const Lattice lat(u.target, static_cast<int>(u.features.rows()), transitions, u.id);
    loss += ForwardBackward(lat, fwd.grid).log_loss;
    frames += u.features.rows();
  }
  if (frames == 0) throw DataError("no feasible utterances to evaluate");
  return loss / static_cast<double>(frames);
}

/// Learning-rate schedule on a lower-is-better dev score.  Returns true when
/// the score improved (and the parameters were retained as the best).
template <typename Real>
bool Schedule(TrainState<Real> &state, double dev_score, const TrainConfig &cfg) {
  if (dev_score < state.best_dev) {
    state.best_dev = dev_score;
    state.best_params = state.params;
    state.epochs_since_improvement = 0;
    return true;
  }
  if (++state.epochs_since_improvement >= cfg.patience) {
    state.lr /= cfg.lr_decay;
    state.epochs_since_improvement = 0;
  }
  return false;
}

struct PolishStats {
  double start_dev = 0.0;
  double best_dev = 0.0;
  std::vector<double> dev_per_epoch;
};

/// Low-rate fine tuning on in-domain data, keeping the dev-best parameters
/// (including the starting point).
template <typename Real>
PolishStats Polish(TrainState<Real> &state, std::span<const Utterance<Real>> in_domain,
                   std::span<const Utterance<Real>> dev, const TrainConfig &cfg) {
  PolishStats ps;
  ps.start_dev = EvaluateLoss(state.params, dev, cfg.transitions);
  ps.best_dev = ps.start_dev;
  NetParams<Real> best = state.params;
  const double saved_lr = state.lr;
  state.lr = saved_lr * cfg.polish_lr_scale;
  std::fill(state.velocity.begin(), state.velocity.end(), Real(0));
  for (int e = 0; e < cfg.polish_epochs; ++e) {
    TrainEpoch(state, in_domain, cfg);
    const double d = EvaluateLoss(state.params, dev, cfg.transitions);
    ps.dev_per_epoch.push_back(d);
    if (d < ps.best_dev) {
      ps.best_dev = d;
      best = state.params;
    }
  }
  state.params = std::move(best);
  state.lr = saved_lr;
  if (ps.best_dev < state.best_dev) {
    state.best_dev = ps.best_dev;
    state.best_params = state.params;
  }
  return ps;
}

}  // namespace ctcasr

#endif  // CTCASR_TRAINER_HPP_
