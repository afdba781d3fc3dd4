// ctcasr/decode.hpp

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

// Turning posterior grids into text: greedy collapse, prefix beam search with
// a unit n-gram model, and the iterated-CTC second pass that re-reads a
// first-pass unit sequence as one-hot input.

#ifndef CTCASR_DECODE_HPP_
#define CTCASR_DECODE_HPP_

#include "ctcasr/charlm.hpp"
#include "ctcasr/common.hpp"
#include "ctcasr/frontend.hpp"
#include "ctcasr/inventory.hpp"
#include "ctcasr/lattice.hpp"
#include "ctcasr/net.hpp"
#include "ctcasr/trainer.hpp"

#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ctcasr {

/// How frame labels collapse into units.
///   kDropBlanksFirst: remove blanks, then merge runs of the same unit.
///                     "a _ a" -> "a".
///   kMergeRunsFirst:  merge runs, then remove blanks (the CTC many-to-one
///                     map).  "a _ a" -> "a a".
enum class CollapseMode { kDropBlanksFirst, kMergeRunsFirst };

inline CollapseMode ParseCollapseMode(std::string_view s) {
  if (s == "drop-blanks-first") return CollapseMode::kDropBlanksFirst;
  if (s == "merge-runs-first") return CollapseMode::kMergeRunsFirst;
  throw UsageError(StrCat("unknown collapse mode '", s, "'"));
}

inline std::string_view CollapseModeName(CollapseMode m) {
  return m == CollapseMode::kDropBlanksFirst ? "drop-blanks-first" : "merge-runs-first";
}

inline std::vector<int> CollapseLabels(std::span<const int> frames, CollapseMode mode) {
  std::vector<int> out;
  if (mode == CollapseMode::kDropBlanksFirst) {
    for (int id : frames) {
      if (id == kBlankId) continue;
      if (out.empty() || out.back() != id) out.push_back(id);
    }
  } else {
    int prev = -1;
    for (int id : frames) {
      if (id != prev && id != kBlankId) out.push_back(id);
      prev = id;
    }
  }
  return out;
}

struct Hypothesis {
  std::vector<int> prefix;
  double log_blank = kLogZero;
  double log_nonblank = kLogZero;
  /// Sum of natural-log LM probabilities of the prefix units.
  double lm_logprob = 0.0;
  double score = kLogZero;

  double total() const { return LogAdd(log_blank, log_nonblank); }
};

struct DecodeResult {
  std::string text;
  std::vector<int> units;
  double score = 0.0;
  std::vector<Hypothesis> nbest;
};

/// Per-frame argmax (lowest id wins ties), then collapse.  The score is the
/// log probability of the argmax path.
template <typename Real>
DecodeResult GreedyDecode(const PosteriorGrid<Real> &grid, const Inventory &inv,
                          CollapseMode mode = CollapseMode::kDropBlanksFirst) {
  std::vector<int> best(static_cast<std::size_t>(grid.frames()));
  DecodeResult res;
  for (Eigen::Index t = 0; t < grid.frames(); ++t) {
    Eigen::Index arg = 0;
    for (Eigen::Index q = 1; q < grid.units(); ++q) {
      if (grid(t, q) > grid(t, arg)) arg = q;
    }
    best[static_cast<std::size_t>(t)] = static_cast<int>(arg);
    res.score += SafeLog(static_cast<double>(grid(t, arg)));
  }
  res.units = CollapseLabels(best, mode);
  res.text = DecodeIds(res.units, inv);
  return res;
}

struct BeamOptions {
  int width = 100;
  double lm_weight = 1.0;
  double insertion_bonus = 1.5;
  int nbest = 0;
};

/// Prefix beam search.  A hypothesis is ranked by
///   log P_ctc(prefix) + lm_weight * log P_lm(prefix) + insertion_bonus * |prefix|
/// and, at the end, the LM sentence-end probability when the model has one.
/// `lm` may be null, in which case lm_weight is ignored.
template <typename Real>
DecodeResult BeamDecode(const PosteriorGrid<Real> &grid, const Inventory &inv,
                        const CharNGram *lm, const BeamOptions &opt) {
  if (opt.width < 1) throw UsageError("beam width must be >= 1");
  if (opt.lm_weight < 0.0 || opt.insertion_bonus < 0.0) {
    throw UsageError("LM weight and insertion bonus must be >= 0");
  }
  const bool use_lm = lm != nullptr && opt.lm_weight > 0.0;
  if (use_lm && lm->num_units() != inv.size()) {
    throw DataError(StrCat("language model covers ", lm->num_units(), " units, inventory has ",
                           inv.size()));
  }
  const int Q = static_cast<int>(grid.units());

  std::map<std::vector<int>, std::vector<double>> lm_cache;
  auto lm_next = [&](const std::vector<int> &prefix) -> const std::vector<double> & {
    auto it = lm_cache.find(prefix);
    if (it != lm_cache.end()) return it->second;
    std::vector<int> ctx{lm->bos()};
    ctx.insert(ctx.end(), prefix.begin(), prefix.end());
    return lm_cache.emplace(prefix, lm->ScoreAll(ctx)).first->second;
  };
  auto rescore = [&](Hypothesis &h) {
    h.score = h.total() + opt.lm_weight * h.lm_logprob +
              opt.insertion_bonus * static_cast<double>(h.prefix.size());
  };
  auto ranked = [](std::map<std::vector<int>, Hypothesis> &m) {
    std::vector<Hypothesis> v;
    v.reserve(m.size());
    for (auto &[k, h] : m) v.push_back(std::move(h));
    std::stable_sort(v.begin(), v.end(),
                     [](const Hypothesis &a, const Hypothesis &b) { return a.score > b.score; });
    return v;
  };

  std::vector<Hypothesis> beam(1);
  beam[0].log_blank = 0.0;
  rescore(beam[0]);
  std::vector<double> logp(static_cast<std::size_t>(Q));
  for (Eigen::Index t = 0; t < grid.frames(); ++t) {
    for (int q = 0; q < Q; ++q) logp[static_cast<std::size_t>(q)] = SafeLog(static_cast<double>(grid(t, q)));
    std::map<std::vector<int>, Hypothesis> next;
    auto slot = [&](const std::vector<int> &prefix, const Hypothesis &parent,
                    int unit) -> Hypothesis & {
      auto [it, fresh] = next.try_emplace(prefix);
      if (fresh) {
        it->second.prefix = prefix;
        it->second.lm_logprob = parent.lm_logprob;
        if (unit >= 0 && use_lm) {
          it->second.lm_logprob += lm_next(parent.prefix)[static_cast<std::size_t>(unit)];
        }
      }
      return it->second;
    };
    for (const Hypothesis &h : beam) {
      const double total = h.total();
      Hypothesis &same = slot(h.prefix, h, -1);
      same.log_blank = LogAdd(same.log_blank, total + logp[kBlankId]);
      const int last = h.prefix.empty() ? -1 : h.prefix.back();
      if (last >= 0) {
        same.log_nonblank = LogAdd(same.log_nonblank,
                                   h.log_nonblank + logp[static_cast<std::size_t>(last)]);
      }
      for (int c = 1; c < Q; ++c) {
        const double lc = logp[static_cast<std::size_t>(c)];
        if (lc == kLogZero) continue;
        std::vector<int> extended = h.prefix;
        extended.push_back(c);
        Hypothesis &ext = slot(extended, h, c);
        ext.log_nonblank = LogAdd(ext.log_nonblank, (c == last ? h.log_blank : total) + lc);
      }
    }
    for (auto &[k, h] : next) rescore(h);
    beam = ranked(next);
    if (static_cast<int>(beam.size()) > opt.width) beam.resize(static_cast<std::size_t>(opt.width));
  }

  if (use_lm && lm->sentence_end()) {
    for (Hypothesis &h : beam) {
      h.score += opt.lm_weight * lm_next(h.prefix)[static_cast<std::size_t>(lm->eos())];
    }
    std::stable_sort(beam.begin(), beam.end(),
                     [](const Hypothesis &a, const Hypothesis &b) { return a.score > b.score; });
  }

  DecodeResult res;
  res.units = beam.front().prefix;
  res.text = DecodeIds(res.units, inv);
  res.score = beam.front().score;
  if (opt.nbest > 0) {
    const std::size_t n = std::min(beam.size(), static_cast<std::size_t>(opt.nbest));
    res.nbest.assign(beam.begin(), beam.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Iterated CTC.

/// Replaces each unit, with probability `rate`, by a different non-blank unit
/// drawn uniformly.
template <typename Rng>
std::vector<int> CorruptUnits(std::span<const int> ids, double rate, int num_units, Rng &rng) {
  if (num_units < 3) throw UsageError("corruption needs at least two non-blank units");
  std::bernoulli_distribution flip(rate);
  std::uniform_int_distribution<int> pick(1, num_units - 2);
  std::vector<int> out(ids.begin(), ids.end());
  for (int &id : out) {
    if (!flip(rng)) continue;
    int r = pick(rng);
    if (r >= id) ++r;
    id = r;
  }
  return out;
}

struct Ctc2Options {
  int upsample = 3;
  NetConfig net = DefaultNet();  // input_dim / output_dim come from the inventory
  TrainConfig train = DefaultTrain();
  int epochs = 20;

  static NetConfig DefaultNet() {
    NetConfig n;
    n.num_layers = 4;
    n.hidden_dim = 256;
    return n;
  }
  static TrainConfig DefaultTrain() {
    TrainConfig t;
    t.learning_rate = 0.1;
    return t;
  }
};

template <typename Real>
struct Ctc2Data {
  std::vector<Utterance<Real>> utterances;
  int skipped_empty = 0;
  int skipped_short = 0;
};

/// Pairs one-hot first-pass outputs with reference unit sequences.
template <typename Real = double>
Ctc2Data<Real> MakeCtc2Data(std::span<const std::string> ids,
                             std::span<const std::vector<int>> first_pass,
                             std::span<const std::vector<int>> references, int num_units,
                             int upsample) {
  if (first_pass.size() != references.size() || ids.size() != references.size()) {
    throw DataError("first-pass outputs and references differ in count");
  }
  Ctc2Data<Real> data;
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (first_pass[i].empty()) {
      ++data.skipped_empty;
      continue;
    }
    Utterance<Real> u;
    u.id = ids[i];
    u.features = OneHotStream(first_pass[i], num_units, upsample).frames.template cast<Real>();
    u.target = references[i];
    if (!Feasible(u)) {
      ++data.skipped_short;
      continue;
    }
    data.utterances.push_back(std::move(u));
  }
  return data;
}

struct Ctc2TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<double> dev_loss;
};

/// Trains the second-pass network on (noisy units -> reference units).  When
/// `dev` is non-empty the learning-rate schedule runs on it and the dev-best
/// parameters are returned.
template <typename Real>
NetParams<Real> Ctc2Train(std::span<const Utterance<Real>> train,
                          std::span<const Utterance<Real>> dev, int num_units,
                          const Ctc2Options &opt, Ctc2TrainReport *report = nullptr) {
  if (train.empty()) throw DataError("no usable utterances for the second-pass network");
  NetConfig cfg = opt.net;
  cfg.input_dim = num_units;
  cfg.output_dim = num_units;
  TrainState<Real> state(InitParams<Real>(cfg, opt.train.seed), opt.train);
  for (int e = 0; e < opt.epochs; ++e) {
    auto st = TrainEpoch<Real>(state, train, opt.train);
    if (report) report->epochs.push_back(st);
    if (!dev.empty()) {
      const double d = EvaluateLoss(state.params, dev, opt.train.transitions);
      if (report) report->dev_loss.push_back(d);
      Schedule(state, d, opt.train);
    }
  }
  return dev.empty() ? state.params : state.best_params;
}

/// Second pass: one-hot of the first-pass units -> network -> greedy decode.
template <typename Real>
DecodeResult Ctc2Apply(const NetParams<Real> &params, const DecodeResult &first_pass,
                       const Inventory &inv, int upsample = 3,
                       CollapseMode mode = CollapseMode::kDropBlanksFirst) {
  if (first_pass.units.empty()) return first_pass;
  const Matrix<Real> x =
      OneHotStream(first_pass.units, inv.size(), upsample).frames.template cast<Real>();
  return GreedyDecode(Forward(params, x).grid, inv, mode);
}

}  // namespace ctcasr

#endif  // CTCASR_DECODE_HPP_
