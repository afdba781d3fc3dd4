// ctcasr/pipeline.hpp

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

// Experiment pipelines behind the command-line tool.  Every step reads its
// inputs from the configuration and the run directory and writes its
// artifacts back there:
//
//   <cmd>.config.json   configuration echo of each command
//   inventory.txt       unit inventory built from the training transcripts
//   lm.txt              unit n-gram language model
//   init.ckpt, best.ckpt, final.ckpt, polished.ckpt, ctc2.ckpt
//   train_log.jsonl, polish_log.jsonl, ctc2_log.jsonl
//   decode.tsv, ctc2_input.tsv, ctc2_output.tsv, score.json, sweep.json

#ifndef CTCASR_PIPELINE_HPP_
#define CTCASR_PIPELINE_HPP_

#include "ctcasr/charlm.hpp"
#include "ctcasr/config.hpp"
#include "ctcasr/data.hpp"
#include "ctcasr/decode.hpp"
#include "ctcasr/eval.hpp"
#include "ctcasr/net.hpp"
#include "ctcasr/trainer.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace ctcasr {

namespace fs = std::filesystem;

inline std::string RunFile(const ExperimentConfig &cfg, const std::string &name) {
  return (fs::path(cfg.run_dir()) / name).string();
}

inline void PrepareRunDir(const ExperimentConfig &cfg, const std::string &command) {
  fs::create_directories(cfg.run_dir());
  cfg.Save(RunFile(cfg, command + ".config.json"));
}

inline std::string RequirePath(const ExperimentConfig &cfg, const char *key) {
  const std::string p = cfg.path(key);
  if (p.empty()) throw UsageError(StrCat("paths.", key, " is not set"));
  return p;
}

inline void AppendJsonLine(const std::string &path, const Json &j) {
  std::ofstream os(path, std::ios::app);
  if (!os) throw DataError(StrCat("cannot write ", path));
  os << j.dump() << '\n';
}

/// Corpus error rate of `hyps` against normalized references.
inline ScoreReport ScoreTexts(const std::vector<std::string> &ids,
                              const std::vector<std::string> &refs,
                              const std::vector<std::string> &hyps, TokenMode mode) {
  ScoreReport r;
  r.mode = mode;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].empty()) continue;
    r.Add(ids[i], refs[i], hyps[i]);
  }
  return r;
}

template <typename Real>
std::vector<std::string> Ids(const Dataset<Real> &ds) {
  std::vector<std::string> ids;
  for (const auto &u : ds.utterances) ids.push_back(u.id);
  return ids;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.  Each index is
/// handled by exactly one worker, so indexed outputs are deterministic.
template <typename Fn>
void ParallelFor(std::size_t n, int threads, Fn &&fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto &t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

template <typename Real>
std::vector<PosteriorGrid<Real>> ComputeGrids(const NetParams<Real> &params, const Dataset<Real> &ds,
                                              int threads = 1) {
  std::vector<PosteriorGrid<Real>> out(ds.utterances.size());
  ParallelFor(out.size(), threads, [&](std::size_t i) { out[i] = Forward(params, ds.utterances[i].features).grid; });
  return out;
}

template <typename Real>
std::vector<DecodeResult> GreedyAll(const std::vector<PosteriorGrid<Real>> &grids, const Inventory &inv,
                                    CollapseMode mode) {
  std::vector<DecodeResult> out;
  for (const auto &g : grids) out.push_back(GreedyDecode(g, inv, mode));
  return out;
}

template <typename Real>
std::vector<DecodeResult> BeamAll(const std::vector<PosteriorGrid<Real>> &grids, const Inventory &inv,
                                  const CharNGram *lm, const BeamOptions &opt, int threads = 1) {
  std::vector<DecodeResult> out(grids.size());
  ParallelFor(out.size(), threads, [&](std::size_t i) { out[i] = BeamDecode(grids[i], inv, lm, opt); });
  return out;
}

inline std::vector<std::string> Texts(const std::vector<DecodeResult> &rs) {
  std::vector<std::string> out;
  for (const auto &r : rs) out.push_back(r.text);
  return out;
}

inline void WriteDecodeTsv(const std::string &path, const std::vector<std::string> &ids,
                           const std::vector<DecodeResult> &rs) {
  std::ofstream os(path);
  if (!os) throw DataError(StrCat("cannot write ", path));
  os << std::setprecision(8);
  for (std::size_t i = 0; i < rs.size(); ++i) os << ids[i] << '\t' << rs[i].text << '\t' << rs[i].score << '\n';
}

template <typename Real>
Dataset<Real> LoadSplit(const ExperimentConfig &cfg, const std::string &manifest, const Inventory &inv) {
  return LoadDataset<Real>(ReadManifest(manifest), inv, cfg.features());
}

template <typename Real>
NetParams<Real> LoadModel(const std::string &path, const Inventory &inv) {
  auto p = LoadCheckpoint<Real>(path);
  if (p.config().output_dim != inv.size()) {
    throw DataError(StrCat("checkpoint ", path, " has ", p.config().output_dim,
                           " outputs but the inventory has ", inv.size(), " units"));
  }
  return p;
}

// ---------------------------------------------------------------------------
// train

struct TrainSummary {
  int epochs = 0;
  double best_dev = 0.0;
  double final_lr = 0.0;
  int skipped = 0;
};

template <typename Real>
double DevScore(const ExperimentConfig &cfg, const NetParams<Real> &params, const Dataset<Real> &dev,
                const Inventory &inv) {
  const std::string metric = cfg.dev_metric();
  if (metric == "loss") return EvaluateLoss<Real>(params, dev.utterances, cfg.transitions());
  const auto hyps = Texts(GreedyAll(ComputeGrids(params, dev, cfg.threads()), inv, cfg.collapse()));
  return ScoreTexts(Ids(dev), dev.texts, hyps, metric == "wer" ? TokenMode::kWord : TokenMode::kChar)
      .error_rate();
}

/// Builds the inventory and LM from the training transcripts, then trains
/// with the learning-rate schedule until max_epochs or until the rate has
/// been cut more than max_decays times.
template <typename Real>
TrainSummary RunTrain(const ExperimentConfig &cfg, std::ostream &log) {
  PrepareRunDir(cfg, "train");
  const auto train_entries = ReadManifest(RequirePath(cfg, "train"));
  const Inventory inv = BuildInventory(Transcripts(train_entries), cfg.scheme());
  inv.Save(RunFile(cfg, "inventory.txt"));

  const auto train = LoadDataset<Real>(train_entries, inv, cfg.features());
  std::vector<std::vector<int>> lm_corpus;
  for (const auto &u : train.utterances) {
    if (!u.target.empty()) lm_corpus.push_back(u.target);
  }
  CharNGram::Train(lm_corpus, inv.size(), cfg.lm_order(), cfg.lm_sentence_end())
      .Save(RunFile(cfg, "lm.txt"));

  const std::string dev_path = cfg.path("dev");
  const Dataset<Real> dev = dev_path.empty() ? train : LoadSplit<Real>(cfg, dev_path, inv);
  if (dev_path.empty()) log << "paths.dev not set; scheduling on the training set\n";

  NetConfig net = cfg.net();
  net.input_dim = static_cast<int>(train.utterances.front().features.cols());
  net.output_dim = inv.size();
  const TrainConfig tc = cfg.train();
  TrainState<Real> state(InitParams<Real>(net, cfg.seed()), tc);
  SaveCheckpoint(RunFile(cfg, "init.ckpt"), state.params);
  log << "units " << inv.size() << ", parameters " << net.ParamCount() << ", utterances "
      << train.utterances.size() << '\n';

  const std::string log_path = RunFile(cfg, "train_log.jsonl");
  fs::remove(log_path);
  TrainSummary sum;
  int decays = 0;
  for (int e = 0; e < tc.max_epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = state.lr;
    const EpochStats st = TrainEpoch<Real>(state, train.utterances, tc);
    const double dev_score = DevScore(cfg, state.params, dev, inv);
    const bool improved = Schedule(state, dev_score, tc);
    if (improved) SaveCheckpoint(RunFile(cfg, "best.ckpt"), state.params);
    if (state.lr < lr) ++decays;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Json j{{"epoch", st.epoch},       {"loss", st.loss_per_frame}, {"dev", dev_score},
           {"dev_metric", cfg.dev_metric()}, {"lr", lr},        {"skipped", st.skipped},
           {"frames", st.frames},     {"updates", st.updates},     {"improved", improved},
           {"seconds", secs}};
    AppendJsonLine(log_path, j);
    log << "epoch " << st.epoch << " loss " << st.loss_per_frame << " dev " << dev_score << " lr "
        << lr << (improved ? " *" : "") << '\n';
    sum.epochs = st.epoch;
    sum.skipped = st.skipped;
    if (decays > cfg.max_decays()) break;
  }
  SaveCheckpoint(RunFile(cfg, "final.ckpt"), state.params);
  sum.best_dev = state.best_dev;
  sum.final_lr = state.lr;
  return sum;
}

// ---------------------------------------------------------------------------
// polish

template <typename Real>
PolishStats RunPolish(const ExperimentConfig &cfg, const std::string &checkpoint, std::ostream &log) {
  PrepareRunDir(cfg, "polish");
  const Inventory inv = Inventory::Load(RunFile(cfg, "inventory.txt"));
  const auto in_domain = LoadSplit<Real>(cfg, RequirePath(cfg, "in_domain"), inv);
  const auto dev = LoadSplit<Real>(cfg, RequirePath(cfg, "dev"), inv);
  const TrainConfig tc = cfg.train();
  TrainState<Real> state(LoadModel<Real>(checkpoint, inv), tc);
  const PolishStats ps = Polish<Real>(state, in_domain.utterances, dev.utterances, tc);
  SaveCheckpoint(RunFile(cfg, "polished.ckpt"), state.params);
  AppendJsonLine(RunFile(cfg, "polish_log.jsonl"),
                 Json{{"start_dev", ps.start_dev}, {"best_dev", ps.best_dev}, {"dev_per_epoch", ps.dev_per_epoch},
                      {"lr", state.lr * tc.polish_lr_scale}});
  log << "polish dev " << ps.start_dev << " -> " << ps.best_dev << '\n';
  return ps;
}

// ---------------------------------------------------------------------------
// decode

struct DecodeRequest {
  std::string checkpoint;
  std::string manifest;
  std::string output;
  std::string nbest_json;
  std::string gamma_dir;
};

template <typename Real>
std::vector<DecodeResult> RunDecode(const ExperimentConfig &cfg, const DecodeRequest &req, std::ostream &log) {
  PrepareRunDir(cfg, "decode");
  const Inventory inv = Inventory::Load(RunFile(cfg, "inventory.txt"));
  const auto params = LoadModel<Real>(req.checkpoint, inv);
  const auto ds = LoadSplit<Real>(cfg, req.manifest, inv);
  const auto grids = ComputeGrids(params, ds, cfg.threads());
  std::vector<DecodeResult> results;
  if (cfg.beam()) {
    const CharNGram lm = CharNGram::Load(RunFile(cfg, "lm.txt"));
    results = BeamAll(grids, inv, &lm, cfg.beam_options(), cfg.threads());
  } else {
    results = GreedyAll(grids, inv, cfg.collapse());
  }
  const auto ids = Ids(ds);
  WriteDecodeTsv(req.output, ids, results);
  if (!req.nbest_json.empty()) {
    Json j = Json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      Json hyps = Json::array();
      for (const auto &h : results[i].nbest) {
        hyps.push_back({{"text", DecodeIds(h.prefix, inv)}, {"score", h.score}, {"acoustic", h.total()},
                        {"lm", h.lm_logprob}});
      }
      j.push_back({{"id", ids[i]}, {"nbest", hyps}});
    }
    std::ofstream(req.nbest_json) << j.dump(2) << '\n';
  }
  if (!req.gamma_dir.empty()) {
    fs::create_directories(req.gamma_dir);
    for (std::size_t i = 0; i < grids.size(); ++i) {
      const auto &u = ds.utterances[i];
      if (!Feasible(u)) continue;
      const Lattice lat(u.target, static_cast<int>(u.features.rows()), cfg.transitions(), u.id);
      std::ofstream os(fs::path(req.gamma_dir) / (u.id + ".gamma.tsv"));
      WriteGammaTsv(os, ForwardBackward(lat, grids[i]).gamma);
    }
  }
  log << "decoded " << results.size() << " utterances -> " << req.output << '\n';
  return results;
}

// ---------------------------------------------------------------------------
// iterated CTC

/// Second-pass inputs: the first pass's greedy output, or (for the
/// controlled corruption task) the reference units with substitutions.
template <typename Real>
std::vector<std::vector<int>> Ctc2Inputs(const ExperimentConfig &cfg, const NetParams<Real> &first,
                                         const Dataset<Real> &ds, const Inventory &inv,
                                         std::uint64_t stream) {
  std::vector<std::vector<int>> out;
  if (cfg.ctc2_corrupted_input()) {
    std::mt19937_64 rng(cfg.seed() * 1000003 + stream);
    for (const auto &u : ds.utterances) {
      out.push_back(CorruptUnits(u.target, cfg.ctc2_corruption_rate(), inv.size(), rng));
    }
  } else {
    for (const auto &r : GreedyAll(ComputeGrids(first, ds, cfg.threads()), inv, cfg.collapse())) out.push_back(r.units);
  }
  return out;
}

template <typename Real>
Ctc2Data<Real> Ctc2Split(const ExperimentConfig &cfg, const NetParams<Real> &first, const Dataset<Real> &ds,
                         const Inventory &inv, std::uint64_t stream) {
  const auto inputs = Ctc2Inputs(cfg, first, ds, inv, stream);
  std::vector<std::vector<int>> refs;
  for (const auto &u : ds.utterances) refs.push_back(u.target);
  const auto ids = Ids(ds);
  return MakeCtc2Data<Real>(ids, inputs, refs, inv.size(), cfg.ctc2().upsample);
}

template <typename Real>
NetParams<Real> RunCtc2Train(const ExperimentConfig &cfg, const std::string &checkpoint, std::ostream &log) {
  PrepareRunDir(cfg, "ctc2-train");
  const Inventory inv = Inventory::Load(RunFile(cfg, "inventory.txt"));
  const auto first = LoadModel<Real>(checkpoint, inv);
  const auto train = Ctc2Split(cfg, first, LoadSplit<Real>(cfg, RequirePath(cfg, "train"), inv), inv, 1);
  const std::string dev_path = cfg.path("dev");
  Ctc2Data<Real> dev;
  if (!dev_path.empty()) dev = Ctc2Split(cfg, first, LoadSplit<Real>(cfg, dev_path, inv), inv, 2);
  log << "second pass: " << train.utterances.size() << " utterances (" << train.skipped_empty
      << " empty, " << train.skipped_short << " too short)\n";
  Ctc2TrainReport report;
  auto params = Ctc2Train<Real>(train.utterances, dev.utterances, inv.size(), cfg.ctc2(), &report);
  const std::string log_path = RunFile(cfg, "ctc2_log.jsonl");
  fs::remove(log_path);
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    Json j{{"epoch", report.epochs[e].epoch}, {"loss", report.epochs[e].loss_per_frame},
           {"lr", report.epochs[e].lr}, {"skipped", report.epochs[e].skipped}};
    if (e < report.dev_loss.size()) j["dev"] = report.dev_loss[e];
    AppendJsonLine(log_path, j);
  }
  SaveCheckpoint(RunFile(cfg, "ctc2.ckpt"), params);
  return params;
}

struct Ctc2ApplyResult {
  std::vector<std::string> ids;
  std::vector<DecodeResult> input;
  std::vector<DecodeResult> output;
};

template <typename Real>
Ctc2ApplyResult RunCtc2Apply(const ExperimentConfig &cfg, const std::string &checkpoint,
                             const std::string &ctc2_checkpoint, const std::string &manifest,
                             std::ostream &log) {
  PrepareRunDir(cfg, "ctc2-apply");
  const Inventory inv = Inventory::Load(RunFile(cfg, "inventory.txt"));
  const auto first = LoadModel<Real>(checkpoint, inv);
  const auto second = LoadModel<Real>(ctc2_checkpoint, inv);
  const auto ds = LoadSplit<Real>(cfg, manifest, inv);
  Ctc2ApplyResult r;
  r.ids = Ids(ds);
  for (auto &units : Ctc2Inputs(cfg, first, ds, inv, 3)) {
    DecodeResult d;
    d.text = DecodeIds(units, inv);
    d.units = std::move(units);
    r.output.push_back(Ctc2Apply(second, d, inv, cfg.ctc2().upsample, cfg.collapse()));
    r.input.push_back(std::move(d));
  }
  WriteDecodeTsv(RunFile(cfg, "ctc2_input.tsv"), r.ids, r.input);
  WriteDecodeTsv(RunFile(cfg, "ctc2_output.tsv"), r.ids, r.output);
  const auto before = ScoreTexts(r.ids, ds.texts, Texts(r.input), TokenMode::kChar);
  const auto after = ScoreTexts(r.ids, ds.texts, Texts(r.output), TokenMode::kChar);
  if (before.total.ref_tokens) {
    log << "CER " << before.error_rate() << " -> " << after.error_rate() << '\n';
  }
  return r;
}

// ---------------------------------------------------------------------------
// score

/// Reads `id<TAB>text` pairs from a manifest (id, path, text) or a decode
/// output (id, text, score).  A third column that parses as a number marks
/// decode output.
inline std::vector<std::pair<std::string, std::string>> ReadTextTable(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError(StrCat("cannot read ", path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() < 2) throw DataError(StrCat(path, ": expected at least two tab-separated columns"));
    rows.push_back(std::move(cols));
  }
  auto numeric = [](const std::string &s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
  };
  bool decode_output = true;
  for (const auto &r : rows) decode_output = decode_output && (r.size() == 2 || numeric(r[2]));
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &r : rows) out.emplace_back(r[0], decode_output || r.size() < 3 ? r[1] : r[2]);
  return out;
}

inline ScoreReport RunScore(const std::string &ref_path, const std::string &hyp_path, TokenMode mode) {
  const auto refs = ReadTextTable(ref_path);
  std::map<std::string, std::string> hyps;
  for (auto &[id, text] : ReadTextTable(hyp_path)) hyps[id] = text;
  ScoreReport report;
  report.mode = mode;
  for (const auto &[id, text] : refs) {
    auto it = hyps.find(id);
    if (it == hyps.end()) throw DataError(StrCat("no hypothesis for utterance ", id));
    report.Add(id, text, it->second);
  }
  return report;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  std::string system;
  double wer = 0.0;
  double cer = 0.0;
};

template <typename Real>
SweepRow ScoreRow(const std::string &name, const Dataset<Real> &ds, const std::vector<DecodeResult> &rs) {
  const auto ids = Ids(ds);
  const auto hyps = Texts(rs);
  return {name, ScoreTexts(ids, ds.texts, hyps, TokenMode::kWord).error_rate(),
          ScoreTexts(ids, ds.texts, hyps, TokenMode::kChar).error_rate()};
}

/// Grid-searches the character beam on dev, then reports greedy, iterated
/// CTC and character beam on test; optionally repeats training under each
/// inventory scheme.  Missing models are trained first.
template <typename Real>
Json RunSweep(const ExperimentConfig &cfg, std::ostream &log) {
  PrepareRunDir(cfg, "sweep");
  if (!fs::exists(RunFile(cfg, "best.ckpt"))) RunTrain<Real>(cfg, log);
  if (!fs::exists(RunFile(cfg, "ctc2.ckpt"))) RunCtc2Train<Real>(cfg, RunFile(cfg, "best.ckpt"), log);
  const Inventory inv = Inventory::Load(RunFile(cfg, "inventory.txt"));
  const CharNGram lm = CharNGram::Load(RunFile(cfg, "lm.txt"));
  const auto first = LoadModel<Real>(RunFile(cfg, "best.ckpt"), inv);
  const auto second = LoadModel<Real>(RunFile(cfg, "ctc2.ckpt"), inv);
  const auto dev = LoadSplit<Real>(cfg, RequirePath(cfg, "dev"), inv);
  const auto test = LoadSplit<Real>(cfg, RequirePath(cfg, "test"), inv);
  const auto &sw = cfg["sweep"];
  const std::string metric = sw["metric"].get<std::string>();
  if (metric != "wer" && metric != "cer") throw UsageError("sweep.metric must be wer or cer");
  auto pick = [&](const SweepRow &r) { return metric == "wer" ? r.wer : r.cer; };

  Json out;
  const auto dev_grids = ComputeGrids(first, dev, cfg.threads());
  BeamOptions best_opt = cfg.beam_options();
  double best_score = std::numeric_limits<double>::infinity();
  out["dev_grid"] = Json::array();
  for (int width : sw["beam_widths"].get<std::vector<int>>()) {
    for (double alpha : sw["lm_weights"].get<std::vector<double>>()) {
      for (double beta : sw["insertion_bonuses"].get<std::vector<double>>()) {
        BeamOptions opt;
        opt.width = width;
        opt.lm_weight = alpha;
        opt.insertion_bonus = beta;
        const SweepRow row = ScoreRow("beam", dev, BeamAll(dev_grids, inv, &lm, opt, cfg.threads()));
        out["dev_grid"].push_back({{"beam_width", width}, {"lm_weight", alpha}, {"insertion_bonus", beta},
                                   {"wer", row.wer}, {"cer", row.cer}});
        log << "dev width " << width << " alpha " << alpha << " beta " << beta << ": WER " << row.wer
            << " CER " << row.cer << '\n';
        if (pick(row) < best_score) {
          best_score = pick(row);
          best_opt = opt;
        }
      }
    }
  }
  out["best"] = {{"beam_width", best_opt.width}, {"lm_weight", best_opt.lm_weight},
                 {"insertion_bonus", best_opt.insertion_bonus}};

  const auto test_grids = ComputeGrids(first, test, cfg.threads());
  const auto raw = GreedyAll(test_grids, inv, cfg.collapse());
  std::vector<DecodeResult> iterated;
  for (const auto &r : raw) iterated.push_back(Ctc2Apply(second, r, inv, cfg.ctc2().upsample, cfg.collapse()));
  const auto beam = BeamAll(test_grids, inv, &lm, best_opt, cfg.threads());
  const SweepRow rows[] = {ScoreRow("none", test, raw), ScoreRow("iterated-ctc", test, iterated),
                           ScoreRow("char-beam", test, beam)};
  out["postprocessing"] = Json::array();
  for (const auto &r : rows) out["postprocessing"].push_back({{"system", r.system}, {"wer", r.wer}, {"cer", r.cer}});

  if (sw["inventory_ablation"].get<bool>()) {
    out["inventory"] = Json::array();
    for (Scheme s : {Scheme::kExplicitSpace, Scheme::kCapitalInitial, Scheme::kInitialAndFinal}) {
      ExperimentConfig sub = cfg;
      sub.tree["inventory"]["scheme"] = std::string(SchemeName(s));
      sub.tree["paths"]["run_dir"] = (fs::path(cfg.run_dir()) / "ablation" / SchemeName(s)).string();
      SweepRow row;
      if (s == cfg.scheme()) {
        row = rows[0];
      } else {
        if (!fs::exists(RunFile(sub, "best.ckpt"))) RunTrain<Real>(sub, log);
        const Inventory sinv = Inventory::Load(RunFile(sub, "inventory.txt"));
        const auto model = LoadModel<Real>(RunFile(sub, "best.ckpt"), sinv);
        const auto stest = LoadSplit<Real>(sub, RequirePath(sub, "test"), sinv);
        row = ScoreRow("none", stest, GreedyAll(ComputeGrids(model, stest, sub.threads()), sinv, sub.collapse()));
      }
      out["inventory"].push_back({{"scheme", SchemeName(s)}, {"wer", row.wer}, {"cer", row.cer}});
    }
  }
  std::ofstream(RunFile(cfg, "sweep.json")) << out.dump(2) << '\n';
  return out;
}

inline void PrintSweepTables(const Json &sweep, std::ostream &os) {
  os << std::fixed << std::setprecision(2);
  os << "post-processing      WER (%)   CER (%)\n";
  for (const auto &r : sweep["postprocessing"]) {
    os << std::left << std::setw(20) << r["system"].get<std::string>() << std::right << std::setw(8)
       << r["wer"].get<double>() << std::setw(10) << r["cer"].get<double>() << '\n';
  }
  if (sweep.contains("inventory")) {
    os << "\ninventory            WER (%)   CER (%)\n";
    for (const auto &r : sweep["inventory"]) {
      os << std::left << std::setw(20) << r["scheme"].get<std::string>() << std::right << std::setw(8)
         << r["wer"].get<double>() << std::setw(10) << r["cer"].get<double>() << '\n';
    }
  }
}

}  // namespace ctcasr

#endif  // CTCASR_PIPELINE_HPP_
