// ctcasr/lattice.hpp

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

// CTC alignment lattice with explicit HMM-style transition weights.
//
// For a target s_1..s_N the lattice has 2N+1 states
//     blank, s_1, blank, s_2, ..., s_N, blank
// (even index = blank).  Every state has a self loop.  A unit state may move
// to the following blank or directly to the next unit (unless both units are
// identical); a blank state may move to the next unit.  Paths start in
// state 0 or 1 and end in state 2N-1 or 2N.  The objective is
//     L = sum_pi P(pi) prod_t p^t[label(pi_t)]
// where P(pi) is the product of the initial prior and transition weights.

#ifndef CTCASR_LATTICE_HPP_
#define CTCASR_LATTICE_HPP_

#include "ctcasr/common.hpp"
#include "ctcasr/inventory.hpp"

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ctcasr {

/// T x Q matrix of per-frame unit probabilities.
template <typename Real>
class PosteriorGrid {
 public:
  PosteriorGrid() = default;

  /// Takes ownership without validation; use Validate() for external data.
  explicit PosteriorGrid(Matrix<Real> probs) : probs_(std::move(probs)) {}

  Eigen::Index frames() const { return probs_.rows(); }
  Eigen::Index units() const { return probs_.cols(); }
  Real operator()(Eigen::Index t, Eigen::Index q) const { return probs_(t, q); }
  const Matrix<Real> &matrix() const { return probs_; }

  /// Throws DataError if an entry is outside [0,1] or a row does not sum to 1.
  void Validate(double tol = 1e-6) const {
    for (Eigen::Index t = 0; t < frames(); ++t) {
      double sum = 0.0;
      for (Eigen::Index q = 0; q < units(); ++q) {
        const double p = static_cast<double>(probs_(t, q));
        if (!(p >= 0.0 && p <= 1.0)) {
          throw DataError(StrCat("posterior out of range at frame ", t, " unit ", q));
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) {
        throw DataError(StrCat("posterior row ", t, " sums to ", sum));
      }
    }
  }

 private:
  Matrix<Real> probs_;
};

struct TransitionConfig {
  double self_loop = 0.5;
  double unit_to_blank = 0.25;
  double unit_to_unit = 0.25;
  double blank_to_unit = 0.25;
  /// Prior of starting in the leading blank / in the first unit.
  double initial = 0.5;
  /// Rescale each state's outgoing weights to sum to one.
  bool normalize = false;
};

/// Minimum frame count that can align `target`: one per unit plus a blank
/// between identical neighbours.
inline int MinimumFrames(std::span<const int> target) {
  int n = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

class Lattice {
 public:
  struct Arc {
    int to;
    double log_weight;
  };

  /// Throws DataError ("unalignable") when `frames` < MinimumFrames(target).
  Lattice(std::span<const int> target, int frames,
          const TransitionConfig &cfg = {}, const std::string &utt_id = "")
      : frames_(frames) {
    if (target.empty()) {
      throw DataError(StrCat("empty target", utt_id.empty() ? "" : " for ", utt_id));
    }
    for (int id : target) {
      if (id == kBlankId) throw DataError("target contains the blank unit");
    }
    const int need = MinimumFrames(target);
    if (frames < need) {
      throw DataError(StrCat("unalignable", utt_id.empty() ? "" : " utterance ", utt_id,
                             ": ", frames, " frames < ", need, " required"));
    }
    const int n = static_cast<int>(target.size());
    labels_.assign(static_cast<std::size_t>(2 * n + 1), kBlankId);
    for (int i = 0; i < n; ++i) labels_[static_cast<std::size_t>(2 * i + 1)] = target[static_cast<std::size_t>(i)];

    const int num_states = 2 * n + 1;
    arcs_.resize(static_cast<std::size_t>(num_states));
    for (int j = 0; j < num_states; ++j) {
      std::vector<std::pair<int, double>> out;
      out.emplace_back(j, cfg.self_loop);
      if (j % 2 == 0) {
        if (j + 1 < num_states) out.emplace_back(j + 1, cfg.blank_to_unit);
      } else {
        out.emplace_back(j + 1, cfg.unit_to_blank);
        if (j + 2 < num_states && labels_[static_cast<std::size_t>(j + 2)] != labels_[static_cast<std::size_t>(j)]) {
          out.emplace_back(j + 2, cfg.unit_to_unit);
        }
      }
      double total = 0.0;
      for (auto &[to, w] : out) total += w;
      for (auto &[to, w] : out) {
        const double weight = cfg.normalize ? w / total : w;
        arcs_[static_cast<std::size_t>(j)].push_back({to, SafeLog(weight)});
      }
    }
    log_initial_ = SafeLog(cfg.initial);
  }

  int frames() const { return frames_; }
  int num_states() const { return static_cast<int>(labels_.size()); }
  int label(int state) const { return labels_[static_cast<std::size_t>(state)]; }
  const std::vector<int> &labels() const { return labels_; }
  const std::vector<Arc> &arcs(int state) const { return arcs_[static_cast<std::size_t>(state)]; }
  double log_initial() const { return log_initial_; }

  bool IsInitial(int state) const { return state == 0 || state == 1; }
  bool IsFinal(int state) const { return state >= num_states() - 2; }

 private:
  int frames_;
  std::vector<int> labels_;
  std::vector<std::vector<Arc>> arcs_;
  double log_initial_;
};

struct CtcResult {
  /// -log L.
  double log_loss = 0.0;
  /// Frame x lattice-state posteriors.
  Matrix<double> gamma;
  /// d(-log L)/d(pre-softmax activation) = p - gamma projected onto units.
  Matrix<double> error_signal;
};

/// Sums state posteriors sharing a unit into a T x Q matrix.
inline Matrix<double> ProjectGamma(const Lattice &lat, const Matrix<double> &gamma,
                                   Eigen::Index num_units) {
  Matrix<double> out = Matrix<double>::Zero(gamma.rows(), num_units);
  for (Eigen::Index t = 0; t < gamma.rows(); ++t) {
    for (int j = 0; j < lat.num_states(); ++j) out(t, lat.label(j)) += gamma(t, j);
  }
  return out;
}

/// Alpha-beta recursions in the log domain.
template <typename Real>
CtcResult ForwardBackward(const Lattice &lat, const PosteriorGrid<Real> &grid) {
  const int T = lat.frames();
  const int S = lat.num_states();
  if (grid.frames() != T) {
    throw DataError(StrCat("posterior grid has ", grid.frames(),
                           " frames, lattice expects ", T));
  }
  for (int j = 0; j < S; ++j) {
    if (lat.label(j) >= grid.units()) {
      throw DataError(StrCat("unit ", lat.label(j), " outside posterior grid width ",
                             grid.units()));
    }
  }

  Matrix<double> log_p(T, S);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < S; ++j) log_p(t, j) = SafeLog(static_cast<double>(grid(t, lat.label(j))));
  }

  Matrix<double> alpha = Matrix<double>::Constant(T, S, kLogZero);
  Matrix<double> beta = Matrix<double>::Constant(T, S, kLogZero);
  for (int j = 0; j < S; ++j) {
    if (lat.IsInitial(j)) alpha(0, j) = lat.log_initial() + log_p(0, j);
  }
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < S; ++j) {
      const double a = alpha(t - 1, j);
      if (a == kLogZero) continue;
      for (const auto &arc : lat.arcs(j)) {
        alpha(t, arc.to) = LogAdd(alpha(t, arc.to), a + arc.log_weight);
      }
    }
    for (int j = 0; j < S; ++j) {
      if (alpha(t, j) != kLogZero) alpha(t, j) += log_p(t, j);
    }
  }
  for (int j = 0; j < S; ++j) {
    if (lat.IsFinal(j)) beta(T - 1, j) = 0.0;
  }
  for (int t = T - 2; t >= 0; --t) {
    for (int j = 0; j < S; ++j) {
      double acc = kLogZero;
      for (const auto &arc : lat.arcs(j)) {
        acc = LogAdd(acc, arc.log_weight + log_p(t + 1, arc.to) + beta(t + 1, arc.to));
      }
      beta(t, j) = acc;
    }
  }

  double log_like = kLogZero;
  for (int j = 0; j < S; ++j) {
    if (lat.IsFinal(j)) log_like = LogAdd(log_like, alpha(T - 1, j));
  }
  if (log_like == kLogZero || !std::isfinite(log_like)) {
    throw NumericalError("CTC lattice has zero total probability");
  }

  CtcResult res;
  res.log_loss = -log_like;
  res.gamma.resize(T, S);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < S; ++j) {
      const double lg = alpha(t, j) + beta(t, j) - log_like;
      res.gamma(t, j) = lg == kLogZero || std::isnan(lg) ? 0.0 : std::exp(lg);
    }
  }
  res.error_signal = grid.matrix().template cast<double>() - ProjectGamma(lat, res.gamma, grid.units());
  return res;
}

/// Interpolates the unit-level posteriors with a uniform distribution:
/// (1 - mass) * gamma + mass / Q.  Rows keep summing to one.
inline Matrix<double> SmoothGamma(const Lattice &lat, const Matrix<double> &gamma,
                                  Eigen::Index num_units, double mass = 0.01) {
  if (!(mass >= 0.0 && mass < 1.0)) {
    throw UsageError(StrCat("smoothing mass must be in [0,1), got ", mass));
  }
  Matrix<double> projected = ProjectGamma(lat, gamma, num_units);
  if (mass == 0.0) return projected;
  return ((1.0 - mass) * projected.array() + mass / static_cast<double>(num_units)).matrix();
}

/// Frame x state TSV dump of gamma.
inline void WriteGammaTsv(std::ostream &os, const Matrix<double> &gamma) {
  for (Eigen::Index t = 0; t < gamma.rows(); ++t) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      if (j) os << '\t';
      os << gamma(t, j);
    }
    os << '\n';
  }
}

}  // namespace ctcasr

#endif  // CTCASR_LATTICE_HPP_
