// ctcasr/eval.hpp

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

// Word / character error rates from a Levenshtein alignment.

#ifndef CTCASR_EVAL_HPP_
#define CTCASR_EVAL_HPP_

#include "ctcasr/common.hpp"
#include "ctcasr/inventory.hpp"

#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace ctcasr {

enum class TokenMode { kWord, kChar };

inline TokenMode ParseTokenMode(std::string_view s) {
  if (s == "word") return TokenMode::kWord;
  if (s == "char") return TokenMode::kChar;
  throw UsageError(StrCat("unknown token mode '", s, "'"));
}

struct EditCounts {
  long substitutions = 0;
  long insertions = 0;
  long deletions = 0;
  long ref_tokens = 0;

  long errors() const { return substitutions + insertions + deletions; }
  double rate() const {
    return ref_tokens ? 100.0 * static_cast<double>(errors()) / static_cast<double>(ref_tokens) : 0.0;
  }
  EditCounts &operator+=(const EditCounts &o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    ref_tokens += o.ref_tokens;
    return *this;
  }
};

/// Words split on spaces; characters include the spaces between words.
inline std::vector<std::string> Tokenize(const std::string &normalized, TokenMode mode) {
  std::vector<std::string> out;
  if (mode == TokenMode::kChar) {
    for (char c : normalized) out.emplace_back(1, c);
    return out;
  }
  for (auto w : detail::SplitWords(normalized)) out.emplace_back(w);
  return out;
}

/// Minimum edit distance with unit costs.  Among equal-cost alignments the
/// backtrace prefers match/substitution, then deletion, then insertion.
inline EditCounts Align(const std::vector<std::string> &ref, const std::vector<std::string> &hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  EditCounts c;
  c.ref_tokens = static_cast<long>(n);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

struct UtteranceScore {
  std::string id;
  EditCounts counts;
};

struct ScoreReport {
  TokenMode mode = TokenMode::kWord;
  EditCounts total;
  std::vector<UtteranceScore> utterances;

  double error_rate() const { return total.rate(); }

  /// Adds one utterance; corpus rate is pooled counts, not a mean of rates.
  void Add(const std::string &id, const std::string &ref, const std::string &hyp) {
    const std::string r = NormalizeText(ref);
    if (r.empty()) throw DataError(StrCat("empty reference for utterance '", id, "'"));
    const EditCounts c = Align(Tokenize(r, mode), Tokenize(NormalizeText(hyp), mode));
    total += c;
    utterances.push_back({id, c});
  }

  nlohmann::json ToJson() const {
    auto counts = [](const EditCounts &c) {
      return nlohmann::json{{"substitutions", c.substitutions},
                            {"insertions", c.insertions},
                            {"deletions", c.deletions},
                            {"reference_tokens", c.ref_tokens},
                            {"error_rate", c.rate()}};
    };
    nlohmann::json j;
    j["token_mode"] = mode == TokenMode::kWord ? "word" : "char";
    j["total"] = counts(total);
    j["utterances"] = nlohmann::json::array();
    for (const auto &u : utterances) {
      auto e = counts(u.counts);
      e["id"] = u.id;
      j["utterances"].push_back(std::move(e));
    }
    return j;
  }

  void PrintTable(std::ostream &os) const {
    const char *name = mode == TokenMode::kWord ? "WER" : "CER";
    os << std::left << std::setw(12) << "tokens" << std::setw(8) << "sub" << std::setw(8)
       << "ins" << std::setw(8) << "del" << name << " (%)\n";
    os << std::setw(12) << total.ref_tokens << std::setw(8) << total.substitutions
       << std::setw(8) << total.insertions << std::setw(8) << total.deletions << std::fixed
       << std::setprecision(2) << total.rate() << '\n';
  }
};

/// Single-pair convenience.
inline ScoreReport Wer(const std::string &ref, const std::string &hyp,
                       TokenMode mode = TokenMode::kWord) {
  ScoreReport r;
  r.mode = mode;
  r.Add("utt", ref, hyp);
  return r;
}

}  // namespace ctcasr

#endif  // CTCASR_EVAL_HPP_
