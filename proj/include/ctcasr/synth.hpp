// ctcasr/synth.hpp

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

// Synthetic speech-like corpus.  Every word of a random lexicon owns a
// smooth 40-dimensional trajectory (piecewise-linear between random anchor
// points) of a fixed length; an utterance is the concatenation of its words'
// trajectories plus white Gaussian noise.  Word sequences follow a sparse
// random bigram chain so that transcripts carry structure a language model
// can exploit.

#ifndef CTCASR_SYNTH_HPP_
#define CTCASR_SYNTH_HPP_

#include "ctcasr/common.hpp"
#include "ctcasr/frontend.hpp"
#include "ctcasr/inventory.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace ctcasr {

struct SynthOptions {
  int vocab = 50;
  int train = 2000;
  int dev = 200;
  int test = 200;
  double noise = 0.1;
  int dim = 40;
  int min_words = 2;
  int max_words = 5;
  int successors = 3;
  std::uint64_t seed = 1;
};

struct SynthWord {
  std::string text;
  Matrix<double> pattern;  // frames x dim
};

struct SynthUtterance {
  std::string id;
  std::string text;
  FeatureMatrix features;
};

class SynthCorpus {
 public:
  explicit SynthCorpus(const SynthOptions &opt) : opt_(opt), rng_(opt.seed) {
    if (opt.vocab < 2) throw UsageError("synthetic vocabulary needs at least 2 words");
    if (opt.min_words < 1 || opt.max_words < opt.min_words) {
      throw UsageError("bad words-per-utterance range");
    }
    if (!(opt.noise >= 0.0)) throw UsageError("noise level must be >= 0");
    MakeLexicon();
    MakeBigrams();
  }

  const std::vector<SynthWord> &lexicon() const { return lexicon_; }

  /// Next utterance from the generator stream.
  SynthUtterance Next(const std::string &id) {
    std::uniform_int_distribution<int> nwords(opt_.min_words, opt_.max_words);
    const int n = nwords(rng_);
    std::vector<std::size_t> words;
    std::uniform_int_distribution<std::size_t> first(0, lexicon_.size() - 1);
    words.push_back(first(rng_));
    std::uniform_int_distribution<std::size_t> succ(0, successors_[0].size() - 1);
    while (static_cast<int>(words.size()) < n) words.push_back(successors_[words.back()][succ(rng_)]);

    SynthUtterance u;
    u.id = id;
    Eigen::Index frames = 0;
    for (std::size_t w : words) frames += lexicon_[w].pattern.rows();
    u.features.frames.resize(frames, opt_.dim);
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < words.size(); ++k) {
      const auto &w = lexicon_[words[k]];
      if (k) u.text += ' ';
      u.text += w.text;
      u.features.frames.middleRows(row, w.pattern.rows()) = w.pattern;
      row += w.pattern.rows();
    }
    if (opt_.noise > 0.0) {
      for (Eigen::Index i = 0; i < u.features.frames.size(); ++i) {
        u.features.frames.data()[i] += opt_.noise * noise(rng_);
      }
    }
    return u;
  }

 private:
  void MakeLexicon() {
    std::uniform_int_distribution<int> len(2, 5);
    std::uniform_int_distribution<int> letter(0, 25);
    std::bernoulli_distribution doubled(0.15);
    std::bernoulli_distribution apostrophe(0.08);
    std::set<std::string> seen;
    while (static_cast<int>(lexicon_.size()) < opt_.vocab) {
      const int n = len(rng_);
      std::string w;
      bool has_apostrophe = false;
      for (int letters = 0; letters < n;) {
        if (letters > 0 && !has_apostrophe && apostrophe(rng_)) {
          w += '\'';
          has_apostrophe = true;
        }
        const char c = static_cast<char>('a' + letter(rng_));
        w += c;
        if (++letters < n && doubled(rng_)) {
          w += c;
          ++letters;
        }
      }
      if (!seen.insert(w).second) continue;
      lexicon_.push_back({w, Pattern(w)});
    }
  }

  /// Trajectory through units + 1 random anchors; 3 frames per unit plus 3
  /// to 5 more, clipped to [8, 20].
  Matrix<double> Pattern(const std::string &word) {
    const auto pieces = detail::SegmentText(word, Scheme::kCapitalInitial);
    const int units = static_cast<int>(pieces.size());
    std::uniform_int_distribution<int> extra(0, 2);
    const int frames = std::clamp(3 * units + 3 + extra(rng_), 8, 20);
    std::normal_distribution<double> n01;
    Matrix<double> anchors(units + 1, opt_.dim);
    for (Eigen::Index i = 0; i < anchors.size(); ++i) anchors.data()[i] = n01(rng_);
    Matrix<double> p(frames, opt_.dim);
    for (int t = 0; t < frames; ++t) {
      const double pos = static_cast<double>(t) * units / std::max(1, frames - 1);
      const int a = std::min(static_cast<int>(pos), units - 1);
      const double f = pos - a;
      p.row(t) = (1.0 - f) * anchors.row(a) + f * anchors.row(a + 1);
    }
    return p;
  }

  void MakeBigrams() {
    std::uniform_int_distribution<std::size_t> pick(0, lexicon_.size() - 1);
    successors_.resize(lexicon_.size());
    for (auto &s : successors_) {
      for (int k = 0; k < std::max(1, opt_.successors); ++k) s.push_back(pick(rng_));
    }
  }

  SynthOptions opt_;
  std::mt19937_64 rng_;
  std::vector<SynthWord> lexicon_;
  std::vector<std::vector<std::size_t>> successors_;
};

/// Writes `<dir>/feats/<id>.feat` for every utterance plus train.tsv,
/// dev.tsv, test.tsv manifests (feature paths relative to `dir`) and
/// lexicon.txt.  Returns the number of utterances written.
inline int WriteSynthCorpus(const std::string &dir, const SynthOptions &opt) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "feats");
  SynthCorpus corpus(opt);
  {
    std::ofstream lex(fs::path(dir) / "lexicon.txt");
    for (const auto &w : corpus.lexicon()) lex << w.text << '\t' << w.pattern.rows() << '\n';
  }
  int written = 0;
  const std::pair<const char *, int> splits[] = {{"train", opt.train}, {"dev", opt.dev}, {"test", opt.test}};
  for (const auto &[name, count] : splits) {
    std::ofstream manifest(fs::path(dir) / (std::string(name) + ".tsv"));
    if (!manifest) throw DataError(StrCat("cannot write manifest in ", dir));
    for (int i = 0; i < count; ++i) {
      std::ostringstream id;
      id << name << '-' << std::setw(5) << std::setfill('0') << i;
      auto u = corpus.Next(id.str());
      const std::string rel = "feats/" + u.id + ".feat";
      WriteFeatures((fs::path(dir) / rel).string(), u.features);
      manifest << u.id << '\t' << rel << '\t' << u.text << '\n';
      ++written;
    }
  }
  return written;
}

}  // namespace ctcasr

#endif  // CTCASR_SYNTH_HPP_
