// ctcasr/config.hpp

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

// Experiment configuration: a JSON tree whose shape is fixed by the
// defaults below.  A user file may set any subset of the keys; a key that
// does not exist in the default tree is rejected.

#ifndef CTCASR_CONFIG_HPP_
#define CTCASR_CONFIG_HPP_

#include "ctcasr/data.hpp"
#include "ctcasr/decode.hpp"
#include "ctcasr/inventory.hpp"
#include "ctcasr/lattice.hpp"
#include "ctcasr/net.hpp"
#include "ctcasr/trainer.hpp"

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace ctcasr {

using Json = nlohmann::ordered_json;

inline Json DefaultConfigTree() {
  return Json::parse(R"({
    "seed": 1,
    "threads": 1,
    "precision": "float",
    "inventory": {"scheme": "capital-initial"},
    "frontend": {"num_mels": 40, "frame_period": 0.01, "window": 0.025,
                 "log_floor": 1e-10, "mean_normalize": true, "stack": true},
    "net": {"hidden_dim": 128, "num_layers": 3, "bidirectional": true,
            "identity_output_init": true},
    "lattice": {"self_loop": 0.5, "unit_to_blank": 0.25, "unit_to_unit": 0.25,
                "blank_to_unit": 0.25, "initial": 0.5, "normalize": false},
    "trainer": {"minibatch": 32, "learning_rate": 0.5, "momentum": 0.9, "l2": 1e-6,
                "clip": 1.0, "clip_mode": "global-norm", "smoothing": 0.01,
                "lr_decay": 4.0, "patience": 3, "max_epochs": 30, "max_decays": 3,
                "polish_lr_scale": 0.1, "polish_epochs": 2, "shuffle": true,
                "dev_metric": "loss"},
    "decode": {"method": "greedy", "collapse": "drop-blanks-first", "beam_width": 100,
               "lm_weight": 1.0, "insertion_bonus": 1.5, "nbest": 0},
    "lm": {"order": 7, "sentence_end": true},
    "ctc2": {"upsample": 3, "hidden_dim": 256, "num_layers": 4, "epochs": 20,
             "learning_rate": 0.1, "minibatch": 32, "input": "decoded",
             "corruption_rate": 0.2},
    "sweep": {"lm_weights": [0.5, 1.0, 2.0], "insertion_bonuses": [0.0, 1.5, 3.0],
              "beam_widths": [10, 50], "inventory_ablation": true, "metric": "wer"},
    "paths": {"run_dir": "run", "train": "", "dev": "", "test": "", "in_domain": ""}
  })");
}

namespace detail {

inline void MergeChecked(Json &dst, const Json &src, const std::string &where) {
  if (!src.is_object()) throw UsageError(StrCat("config: ", where.empty() ? "top level" : where, " must be an object"));
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!dst.contains(it.key())) throw UsageError(StrCat("config: unknown key '", key, "'"));
    Json &slot = dst[it.key()];
    if (slot.is_object()) {
      MergeChecked(slot, it.value(), key);
      continue;
    }
    const bool number_ok = slot.is_number() && it.value().is_number();
    if (!number_ok && slot.type() != it.value().type()) {
      throw UsageError(StrCat("config: '", key, "' should be a ", slot.type_name(), ", got ",
                              it.value().type_name()));
    }
    if (slot.is_number_integer() && !it.value().is_number_integer()) {
      throw UsageError(StrCat("config: '", key, "' should be an integer"));
    }
    slot = it.value();
  }
}

}  // namespace detail

struct ExperimentConfig {
  Json tree = DefaultConfigTree();

  /// Merges a JSON document into the current tree.
  void Merge(const Json &j) { detail::MergeChecked(tree, j, ""); }

  void MergeFile(const std::string &path) {
    std::ifstream is(path);
    if (!is) throw DataError(StrCat("cannot read config ", path));
    Json j;
    try {
      j = Json::parse(is);
    } catch (const Json::parse_error &e) {
      throw UsageError(StrCat("config ", path, ": ", e.what()));
    }
    Merge(j);
  }

  /// `a.b.c=value`; the value is read as JSON when it parses, otherwise as a
  /// string.
  void Set(const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError(StrCat("--set expects key=value, got '", assignment, "'"));
    }
    Json value = Json::parse(assignment.substr(eq + 1), nullptr, false);
    if (value.is_discarded()) value = assignment.substr(eq + 1);
    Json patch = value;
    std::string path = assignment.substr(0, eq);
    while (true) {
      const auto dot = path.rfind('.');
      Json wrap = Json::object();
      wrap[path.substr(dot == std::string::npos ? 0 : dot + 1)] = std::move(patch);
      patch = std::move(wrap);
      if (dot == std::string::npos) break;
      path.resize(dot);
    }
    Merge(patch);
  }

  /// Named bundles of overrides.
  void ApplyPreset(const std::string &name) {
    if (name == "fisher") {
      tree["trainer"]["patience"] = 1;
    } else {
      throw UsageError(StrCat("unknown preset '", name, "'"));
    }
  }

  const Json &operator[](const char *key) const { return tree.at(key); }

  std::uint64_t seed() const { return tree.at("seed").get<std::uint64_t>(); }
  int threads() const { return tree.at("threads").get<int>(); }
  bool use_double() const {
    const auto p = tree.at("precision").get<std::string>();
    if (p != "float" && p != "double") throw UsageError(StrCat("precision must be float or double, got '", p, "'"));
    return p == "double";
  }
  Scheme scheme() const { return ParseScheme(tree["inventory"]["scheme"].get<std::string>()); }
  std::string path(const char *key) const { return tree["paths"][key].get<std::string>(); }
  std::string run_dir() const { return path("run_dir"); }

  FeatureOptions features() const {
    const auto &f = tree["frontend"];
    FeatureOptions o;
    o.logmel.num_mels = f["num_mels"].get<int>();
    o.logmel.frame_period = f["frame_period"].get<double>();
    o.logmel.window = f["window"].get<double>();
    o.logmel.log_floor = f["log_floor"].get<double>();
    o.logmel.mean_normalize = f["mean_normalize"].get<bool>();
    o.stack = f["stack"].get<bool>();
    return o;
  }

  TransitionConfig transitions() const {
    const auto &l = tree["lattice"];
    TransitionConfig t;
    t.self_loop = l["self_loop"].get<double>();
    t.unit_to_blank = l["unit_to_blank"].get<double>();
    t.unit_to_unit = l["unit_to_unit"].get<double>();
    t.blank_to_unit = l["blank_to_unit"].get<double>();
    t.initial = l["initial"].get<double>();
    t.normalize = l["normalize"].get<bool>();
    return t;
  }

  /// input_dim / output_dim are left for the caller.
  NetConfig net() const {
    const auto &n = tree["net"];
    NetConfig c;
    c.hidden_dim = n["hidden_dim"].get<int>();
    c.num_layers = n["num_layers"].get<int>();
    c.bidirectional = n["bidirectional"].get<bool>();
    c.identity_output_init = n["identity_output_init"].get<bool>();
    return c;
  }

  TrainConfig train() const {
    const auto &t = tree["trainer"];
    TrainConfig c;
    c.minibatch = t["minibatch"].get<int>();
    c.learning_rate = t["learning_rate"].get<double>();
    c.momentum = t["momentum"].get<double>();
    c.l2 = t["l2"].get<double>();
    c.clip = t["clip"].get<double>();
    c.clip_mode = ParseClipMode(t["clip_mode"].get<std::string>());
    c.smoothing = t["smoothing"].get<double>();
    c.lr_decay = t["lr_decay"].get<double>();
    c.patience = t["patience"].get<int>();
    c.max_epochs = t["max_epochs"].get<int>();
    c.polish_lr_scale = t["polish_lr_scale"].get<double>();
    c.polish_epochs = t["polish_epochs"].get<int>();
    c.shuffle = t["shuffle"].get<bool>();
    c.threads = threads();
    c.seed = seed();
    c.transitions = transitions();
    c.Validate();
    return c;
  }

  int max_decays() const { return tree["trainer"]["max_decays"].get<int>(); }
  std::string dev_metric() const {
    auto m = tree["trainer"]["dev_metric"].get<std::string>();
    if (m != "loss" && m != "wer" && m != "cer") {
      throw UsageError(StrCat("trainer.dev_metric must be loss, wer or cer, got '", m, "'"));
    }
    return m;
  }

  CollapseMode collapse() const { return ParseCollapseMode(tree["decode"]["collapse"].get<std::string>()); }
  bool beam() const {
    const auto m = tree["decode"]["method"].get<std::string>();
    if (m != "greedy" && m != "beam") throw UsageError(StrCat("decode.method must be greedy or beam, got '", m, "'"));
    return m == "beam";
  }
  BeamOptions beam_options() const {
    const auto &d = tree["decode"];
    BeamOptions b;
    b.width = d["beam_width"].get<int>();
    b.lm_weight = d["lm_weight"].get<double>();
    b.insertion_bonus = d["insertion_bonus"].get<double>();
    b.nbest = d["nbest"].get<int>();
    return b;
  }

  int lm_order() const { return tree["lm"]["order"].get<int>(); }
  bool lm_sentence_end() const { return tree["lm"]["sentence_end"].get<bool>(); }

  Ctc2Options ctc2() const {
    const auto &c = tree["ctc2"];
    Ctc2Options o;
    o.upsample = c["upsample"].get<int>();
    o.net.hidden_dim = c["hidden_dim"].get<int>();
    o.net.num_layers = c["num_layers"].get<int>();
    o.net.bidirectional = true;
    o.train = train();
    o.train.learning_rate = c["learning_rate"].get<double>();
    o.train.minibatch = c["minibatch"].get<int>();
    o.train.Validate();
    o.epochs = c["epochs"].get<int>();
    return o;
  }
  bool ctc2_corrupted_input() const {
    const auto m = tree["ctc2"]["input"].get<std::string>();
    if (m != "decoded" && m != "corrupted") throw UsageError(StrCat("ctc2.input must be decoded or corrupted, got '", m, "'"));
    return m == "corrupted";
  }
  double ctc2_corruption_rate() const { return tree["ctc2"]["corruption_rate"].get<double>(); }

  void Save(const std::string &path) const {
    std::ofstream os(path);
    if (!os) throw DataError(StrCat("cannot write ", path));
    os << tree.dump(2) << '\n';
  }
};

}  // namespace ctcasr

#endif  // CTCASR_CONFIG_HPP_
