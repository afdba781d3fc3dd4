// ctcasr/charlm.hpp

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

// Unit-level n-gram language model with interpolated Witten-Bell smoothing,
// stored in backoff form:
//   P(w | h) = stored(h, w)                 if (h, w) was observed
//            = bow(h) * P(w | h')           otherwise (h' drops the oldest unit)
// with, for an observed context h,
//   stored(h, w) = (c(h, w) + N1+(h) P(w | h')) / (c(h) + N1+(h))
//   bow(h)       = N1+(h) / (c(h) + N1+(h))
// and the unigram interpolated with a uniform distribution over the
// predictable tokens.  Token ids are inventory unit ids (1..Q-1); Q is the
// sentence-end token and Q+1 the sentence-begin token.

#ifndef CTCASR_CHARLM_HPP_
#define CTCASR_CHARLM_HPP_

#include "ctcasr/common.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace ctcasr {

class CharNGram {
 public:
  CharNGram() = default;

  /// `corpus` holds unit-id sequences over an inventory of `num_units` units.
  /// With `sentence_end`, every sentence also predicts the end token.
  static CharNGram Train(std::span<const std::vector<int>> corpus, int num_units, int order,
                         bool sentence_end = true) {
    if (order < 1) throw UsageError(StrCat("n-gram order must be >= 1, got ", order));
    if (corpus.empty()) throw DataError("cannot train an n-gram model on an empty corpus");
    CharNGram lm;
    lm.order_ = order;
    lm.num_units_ = num_units;
    lm.sentence_end_ = sentence_end;

    // counts[h][w] for every history length 0..order-1.
    std::map<std::vector<int>, std::map<int, double>> counts;
    for (const auto &sent : corpus) {
      std::vector<int> tokens{lm.bos()};
      for (int id : sent) {
        lm.CheckUnit(id);
        tokens.push_back(id);
      }
      if (sentence_end) tokens.push_back(lm.eos());
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const std::size_t max_hist = std::min<std::size_t>(static_cast<std::size_t>(order - 1), i);
        for (std::size_t k = 0; k <= max_hist; ++k) {
          std::vector<int> h(tokens.begin() + static_cast<std::ptrdiff_t>(i - k),
                             tokens.begin() + static_cast<std::ptrdiff_t>(i));
          counts[std::move(h)][tokens[i]] += 1.0;
        }
      }
    }

    // Lower orders first so that P(w | h') is available.
    std::vector<std::pair<const std::vector<int> *, const std::map<int, double> *>> by_len;
    for (const auto &[h, wc] : counts) by_len.emplace_back(&h, &wc);
    std::stable_sort(by_len.begin(), by_len.end(),
                     [](const auto &a, const auto &b) { return a.first->size() < b.first->size(); });

    const double vocab = lm.vocab_size();
    for (const auto &[hp, wcp] : by_len) {
      const auto &h = *hp;
      const auto &wc = *wcp;
      double total = 0.0;
      for (const auto &[w, c] : wc) total += c;
      const auto types = static_cast<double>(wc.size());
      Context ctx;
      ctx.log10_backoff = std::log10(types / (total + types));
      if (h.empty()) {
        for (int w = 1; w <= lm.max_token(); ++w) {
          auto it = wc.find(w);
          const double c = it == wc.end() ? 0.0 : it->second;
          ctx.log10_prob[w] = std::log10((c + types / vocab) / (total + types));
        }
      } else {
        const std::vector<int> shorter(h.begin() + 1, h.end());
        for (const auto &[w, c] : wc) {
          const double lower = std::pow(10.0, lm.Log10Prob(shorter, w));
          ctx.log10_prob[w] = std::log10((c + types * lower) / (total + types));
        }
      }
      lm.contexts_.emplace(h, std::move(ctx));
    }
    return lm;
  }

  int order() const { return order_; }
  int num_units() const { return num_units_; }
  bool sentence_end() const { return sentence_end_; }
  int eos() const { return num_units_; }
  int bos() const { return num_units_ + 1; }

  /// Natural-log P(next | last order-1 tokens of context).
  double Score(std::span<const int> context, int next) const {
    if (next < 1 || next > max_token()) {
      throw DataError(StrCat("unit ", next, " is not predictable by the language model"));
    }
    for (int id : context) {
      if (id < 1 || id > bos()) throw DataError(StrCat("unknown unit id ", id, " in LM context"));
    }
    const std::size_t k = std::min<std::size_t>(context.size(), static_cast<std::size_t>(order_ - 1));
    const std::vector<int> h(context.end() - static_cast<std::ptrdiff_t>(k), context.end());
    return Log10Prob(h, next) * std::numbers::ln10;
  }

  /// Natural-log probabilities for all token ids 0..eos (blank and, without
  /// sentence ends, eos are -inf).
  std::vector<double> ScoreAll(std::span<const int> context) const {
    std::vector<double> out(static_cast<std::size_t>(eos() + 1), kLogZero);
    for (int w = 1; w <= max_token(); ++w) out[static_cast<std::size_t>(w)] = Score(context, w);
    return out;
  }

  /// Sorted text form: context lines with their log10 backoff, then one
  /// `context<TAB>unit<TAB>log10-prob` line per stored probability.  Values
  /// use the shortest round-trip decimal representation.
  void Write(std::ostream &os) const {
    os << "\\ctcasr-ngram\\\n";
    os << "order\t" << order_ << "\nunits\t" << num_units_ << "\nsentence_end\t"
       << (sentence_end_ ? 1 : 0) << '\n';
    os << "\\contexts\\\n";
    for (const auto &[h, ctx] : contexts_) {
      os << ContextString(h) << '\t' << Num(ctx.log10_backoff) << '\n';
    }
    os << "\\probs\\\n";
    for (const auto &[h, ctx] : contexts_) {
      for (const auto &[w, lp] : ctx.log10_prob) {
        os << ContextString(h) << '\t' << w << '\t' << Num(lp) << '\n';
      }
    }
    os << "\\end\\\n";
  }

  static CharNGram Read(std::istream &is) {
    CharNGram lm;
    std::string line;
    auto expect = [&](const std::string &want) {
      if (!std::getline(is, line) || line != want) {
        throw DataError(StrCat("n-gram file: expected '", want, "', got '", line, "'"));
      }
    };
    auto header = [&](const std::string &key) {
      if (!std::getline(is, line) || line.rfind(key + "\t", 0) != 0) {
        throw DataError(StrCat("n-gram file: missing ", key));
      }
      return std::stoi(line.substr(key.size() + 1));
    };
    expect("\\ctcasr-ngram\\");
    lm.order_ = header("order");
    lm.num_units_ = header("units");
    lm.sentence_end_ = header("sentence_end") != 0;
    expect("\\contexts\\");
    while (std::getline(is, line) && line != "\\probs\\") {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw DataError(StrCat("n-gram file: bad line '", line, "'"));
      lm.contexts_[ParseContext(line.substr(0, tab))].log10_backoff = ParseNum(line.substr(tab + 1));
    }
    while (std::getline(is, line) && line != "\\end\\") {
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) throw DataError(StrCat("n-gram file: bad line '", line, "'"));
      auto it = lm.contexts_.find(ParseContext(line.substr(0, t1)));
      if (it == lm.contexts_.end()) throw DataError("n-gram file: probability for unknown context");
      it->second.log10_prob[std::stoi(line.substr(t1 + 1, t2 - t1 - 1))] =
          ParseNum(line.substr(t2 + 1));
    }
    if (line != "\\end\\") throw DataError("n-gram file: missing \\end\\");
    if (lm.order_ < 1 || !lm.contexts_.count({})) throw DataError("n-gram file: no unigram table");
    return lm;
  }

  void Save(const std::string &path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError(StrCat("cannot write ", path));
    Write(os);
  }

  static CharNGram Load(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(StrCat("cannot read ", path));
    return Read(is);
  }

 private:
  struct Context {
    double log10_backoff = 0.0;
    std::map<int, double> log10_prob;
  };

  int max_token() const { return sentence_end_ ? eos() : eos() - 1; }
  double vocab_size() const { return static_cast<double>(max_token()); }

  void CheckUnit(int id) const {
    if (id < 1 || id >= num_units_) throw DataError(StrCat("unit id ", id, " outside inventory"));
  }

  double Log10Prob(const std::vector<int> &h, int w) const {
    double acc = 0.0;
    for (std::size_t drop = 0; drop <= h.size(); ++drop) {
      const std::vector<int> ctx(h.begin() + static_cast<std::ptrdiff_t>(drop), h.end());
      auto it = contexts_.find(ctx);
      if (it == contexts_.end()) continue;
      auto pw = it->second.log10_prob.find(w);
      if (pw != it->second.log10_prob.end()) return acc + pw->second;
      acc += it->second.log10_backoff;
    }
    // Unreachable when the unigram table is complete.
    throw DataError(StrCat("n-gram model has no probability for unit ", w));
  }

  static std::string ContextString(const std::vector<int> &h) {
    if (h.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (i) s += ' ';
      s += std::to_string(h[i]);
    }
    return s;
  }

  static std::vector<int> ParseContext(const std::string &s) {
    std::vector<int> h;
    if (s == "-") return h;
    std::istringstream is(s);
    int v = 0;
    while (is >> v) h.push_back(v);
    return h;
  }

  static std::string Num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  }

  static double ParseNum(const std::string &s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw DataError(StrCat("n-gram file: bad number '", s, "'"));
    return v;
  }

  int order_ = 1;
  int num_units_ = 1;
  bool sentence_end_ = true;
  std::map<std::vector<int>, Context> contexts_;
};

}  // namespace ctcasr

#endif  // CTCASR_CHARLM_HPP_
