// ctcasr/data.hpp

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

// Dataset manifests: one `utt-id<TAB>feature-or-wav-path<TAB>transcript`
// line per utterance; relative paths are taken from the manifest's
// directory.

#ifndef CTCASR_DATA_HPP_
#define CTCASR_DATA_HPP_

#include "ctcasr/frontend.hpp"
#include "ctcasr/inventory.hpp"
#include "ctcasr/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ctcasr {

struct ManifestEntry {
  std::string id;
  std::string path;  // resolved
  std::string text;
};

inline std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError(StrCat("cannot read manifest ", path));
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError(StrCat(path, ":", lineno, ": expected utt-id<TAB>path<TAB>transcript"));
    }
    ManifestEntry e{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1)};
    if (e.id.empty() || e.path.empty()) throw DataError(StrCat(path, ":", lineno, ": empty field"));
    if (std::filesystem::path(e.path).is_relative()) e.path = (base / e.path).string();
    out.push_back(std::move(e));
  }
  if (out.empty()) throw DataError(StrCat("manifest ", path, " is empty"));
  return out;
}

struct FeatureOptions {
  LogMelOptions logmel;
  bool stack = true;
};

/// Features as seen by the network: mean-normalized and (optionally)
/// stacked in threes.
inline FeatureMatrix LoadNetworkInput(const std::string &path, const FeatureOptions &opt) {
  FeatureMatrix f = ReadFeatures(path, opt.logmel);
  if (opt.logmel.mean_normalize && !path.ends_with(".wav")) MeanNormalize(f.frames);
  return opt.stack ? Stack3(f) : f;
}

template <typename Real>
struct Dataset {
  std::vector<Utterance<Real>> utterances;
  std::vector<std::string> texts;  // normalized references, parallel to utterances
};

/// Loads and encodes every manifest entry.  An empty transcript leaves the
/// target empty (decodable, not trainable).
template <typename Real>
Dataset<Real> LoadDataset(const std::vector<ManifestEntry> &entries, const Inventory &inv,
                          const FeatureOptions &opt) {
  Dataset<Real> ds;
  for (const auto &e : entries) {
    Utterance<Real> u;
    u.id = e.id;
    u.features = LoadNetworkInput(e.path, opt).frames.template cast<Real>();
    std::string norm;
    try {
      norm = NormalizeText(e.text);
      if (!norm.empty()) u.target = Encode(norm, inv).ids;
    } catch (const DataError &err) {
      throw DataError(StrCat("utterance ", e.id, ": ", err.what()));
    }
    ds.texts.push_back(std::move(norm));
    ds.utterances.push_back(std::move(u));
  }
  return ds;
}

inline std::vector<std::string> Transcripts(const std::vector<ManifestEntry> &entries) {
  std::vector<std::string> out;
  for (const auto &e : entries) out.push_back(e.text);
  return out;
}

}  // namespace ctcasr

#endif  // CTCASR_DATA_HPP_
