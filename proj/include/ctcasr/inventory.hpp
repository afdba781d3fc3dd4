// ctcasr/inventory.hpp

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

// Graphemic unit inventories and the text <-> unit-id codec.
//
// Three labelling schemes are supported:
//   capital-initial   "yes he has one" -> Y e s H e H a s O n e
//   explicit-space    "yes he has one" -> y e s _ h e _ h a s _ o n e
//   initial-and-final "yes he has one" -> Y e s$ H e$ H a s$ O n e$
// In every scheme a run of two identical letters is a single double-letter
// unit ("ll"), and an apostrophe is fused with the letter that follows it
// ("'d").  Word-initial apostrophe units carry the capital ("'E").

#ifndef CTCASR_INVENTORY_HPP_
#define CTCASR_INVENTORY_HPP_

#include "ctcasr/common.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctcasr {

enum class Scheme { kCapitalInitial, kExplicitSpace, kInitialAndFinal };

enum class UnitKind {
  kBlank,
  kInitialLetter,
  kInteriorLetter,
  kDoubleLetter,
  kApostrophe,
  kFinalLetter,
  kOther
};

inline constexpr int kBlankId = 0;
inline constexpr std::string_view kBlankSurface = "<blank>";
inline constexpr std::string_view kSpaceSurface = "_";

inline std::string_view SchemeName(Scheme s) {
  switch (s) {
    case Scheme::kCapitalInitial: return "capital-initial";
    case Scheme::kExplicitSpace: return "explicit-space";
    case Scheme::kInitialAndFinal: return "initial-and-final";
  }
  return "?";
}

inline Scheme ParseScheme(std::string_view name) {
  if (name == "capital-initial") return Scheme::kCapitalInitial;
  if (name == "explicit-space") return Scheme::kExplicitSpace;
  if (name == "initial-and-final") return Scheme::kInitialAndFinal;
  throw UsageError(StrCat("unknown inventory scheme '", name, "'"));
}

inline std::string_view KindName(UnitKind k) {
  switch (k) {
    case UnitKind::kBlank: return "blank";
    case UnitKind::kInitialLetter: return "initial";
    case UnitKind::kInteriorLetter: return "interior";
    case UnitKind::kDoubleLetter: return "double";
    case UnitKind::kApostrophe: return "apostrophe";
    case UnitKind::kFinalLetter: return "final";
    case UnitKind::kOther: return "other";
  }
  return "?";
}

inline UnitKind ParseKind(std::string_view name) {
  for (UnitKind k : {UnitKind::kBlank, UnitKind::kInitialLetter,
                     UnitKind::kInteriorLetter, UnitKind::kDoubleLetter,
                     UnitKind::kApostrophe, UnitKind::kFinalLetter,
                     UnitKind::kOther}) {
    if (KindName(k) == name) return k;
  }
  throw DataError(StrCat("unknown unit kind '", name, "'"));
}

struct Unit {
  int id = 0;
  std::string surface;
  UnitKind kind = UnitKind::kBlank;

  bool operator==(const Unit &) const = default;
};

/// Whether a unit opens a word when rendered as text.
inline bool IsWordInitial(const Unit &u) {
  if (u.kind == UnitKind::kInitialLetter) return true;
  return u.kind == UnitKind::kApostrophe && u.surface.size() == 2 &&
         std::isupper(static_cast<unsigned char>(u.surface[1]));
}

/// Lowercases, drops punctuation other than apostrophes, drops apostrophes
/// not followed by a letter and collapses whitespace.  Throws DataError
/// naming the first character outside [A-Za-z' ] and ASCII punctuation.
inline std::string NormalizeText(std::string_view text) {
  std::string kept;
  kept.reserve(text.size());
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalpha(uc) && uc < 128) {
      kept.push_back(static_cast<char>(std::tolower(uc)));
    } else if (c == '\'') {
      kept.push_back(c);
    } else if (std::isspace(uc)) {
      kept.push_back(' ');
    } else if (std::ispunct(uc) && uc < 128) {
      continue;
    } else {
      throw DataError(StrCat("unsupported character '", c, "' (code ",
                             static_cast<int>(uc), ")"));
    }
  }
  std::string out;
  out.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const char c = kept[i];
    if (c == '\'') {
      const bool letter_follows =
          i + 1 < kept.size() && std::isalpha(static_cast<unsigned char>(kept[i + 1]));
      if (!letter_follows) continue;
    }
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

namespace detail {

struct Piece {
  std::string surface;
  UnitKind kind;
};

inline char Upper(char c) {
  return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

/// Splits one normalized word into unit surfaces under `scheme`.
inline std::vector<Piece> SegmentWord(std::string_view w, Scheme scheme) {
  std::vector<Piece> out;
  std::size_t i = 0;
  if (scheme != Scheme::kExplicitSpace) {
    if (w[0] == '\'') {
      out.push_back({std::string{'\'', Upper(w[1])}, UnitKind::kApostrophe});
      i = 2;
    } else {
      out.push_back({std::string(1, Upper(w[0])), UnitKind::kInitialLetter});
      i = 1;
    }
  }
  while (i < w.size()) {
    if (w[i] == '\'') {
      out.push_back({std::string{'\'', w[i + 1]}, UnitKind::kApostrophe});
      i += 2;
    } else if (i + 1 < w.size() && w[i + 1] == w[i]) {
      out.push_back({std::string{w[i], w[i]}, UnitKind::kDoubleLetter});
      i += 2;
    } else {
      out.push_back({std::string(1, w[i]), UnitKind::kInteriorLetter});
      i += 1;
    }
  }
  if (scheme == Scheme::kInitialAndFinal && out.size() >= 2 &&
      out.back().kind == UnitKind::kInteriorLetter) {
    out.back().surface += '$';
    out.back().kind = UnitKind::kFinalLetter;
  }
  return out;
}

inline std::vector<std::string_view> SplitWords(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find(' ', pos), text.size());
    if (end > pos) words.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return words;
}

/// Unit pieces of a whole normalized utterance.
inline std::vector<Piece> SegmentText(std::string_view normalized, Scheme scheme) {
  std::vector<Piece> out;
  const auto words = SplitWords(normalized);
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k > 0 && scheme == Scheme::kExplicitSpace) {
      out.push_back({std::string(kSpaceSurface), UnitKind::kOther});
    }
    auto pieces = SegmentWord(words[k], scheme);
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

}  // namespace detail

/// Ordered, immutable unit set.  Id 0 is the blank.
class Inventory {
 public:
  Inventory() : Inventory(Scheme::kCapitalInitial, {}) {}

  /// `units` excludes the blank; they are re-sorted by surface and
  /// renumbered from 1.
  Inventory(Scheme scheme, std::vector<Unit> units) : scheme_(scheme) {
    std::sort(units.begin(), units.end(),
              [](const Unit &a, const Unit &b) { return a.surface < b.surface; });
    units_.push_back({kBlankId, std::string(kBlankSurface), UnitKind::kBlank});
    for (auto &u : units) {
      if (u.kind == UnitKind::kBlank) throw DataError("blank unit listed twice");
      u.id = static_cast<int>(units_.size());
      units_.push_back(std::move(u));
    }
    Index();
  }

  Scheme scheme() const { return scheme_; }
  int size() const { return static_cast<int>(units_.size()); }
  const std::vector<Unit> &units() const { return units_; }

  const Unit &unit(int id) const {
    if (id < 0 || id >= size()) throw DataError(StrCat("unknown unit id ", id));
    return units_[static_cast<std::size_t>(id)];
  }

  std::optional<int> Find(std::string_view surface) const {
    auto it = lookup_.find(std::string(surface));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const Inventory &o) const {
    return scheme_ == o.scheme_ && units_ == o.units_;
  }

  /// One `id<TAB>surface<TAB>kind` line per unit.
  void Write(std::ostream &os) const {
    for (const auto &u : units_) {
      os << u.id << '\t' << u.surface << '\t' << KindName(u.kind) << '\n';
    }
  }

  static Inventory Read(std::istream &is) {
    std::vector<Unit> units;
    std::string line;
    int expected = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) {
        throw DataError(StrCat("malformed inventory line '", line, "'"));
      }
      Unit u;
      try {
        u.id = std::stoi(line.substr(0, t1));
      } catch (const std::exception &) {
        throw DataError(StrCat("malformed inventory id in '", line, "'"));
      }
      u.surface = line.substr(t1 + 1, t2 - t1 - 1);
      u.kind = ParseKind(line.substr(t2 + 1));
      if (u.id != expected++) {
        throw DataError(StrCat("inventory ids must be consecutive from 0, got ", u.id));
      }
      units.push_back(std::move(u));
    }
    if (units.empty() || units[0].kind != UnitKind::kBlank ||
        units[0].surface != kBlankSurface) {
      throw DataError("inventory must start with the blank unit");
    }
    Inventory inv;
    inv.units_ = std::move(units);
    inv.scheme_ = Scheme::kCapitalInitial;
    for (const auto &u : inv.units_) {
      if (u.surface == kSpaceSurface) inv.scheme_ = Scheme::kExplicitSpace;
      if (u.kind == UnitKind::kFinalLetter) inv.scheme_ = Scheme::kInitialAndFinal;
    }
    inv.Index();
    return inv;
  }

  void Save(const std::string &path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError(StrCat("cannot write inventory ", path));
    Write(os);
  }

  static Inventory Load(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(StrCat("cannot read inventory ", path));
    return Read(is);
  }

 private:
  void Index() {
    lookup_.clear();
    for (const auto &u : units_) {
      if (!lookup_.emplace(u.surface, u.id).second) {
        throw DataError(StrCat("duplicate unit surface '", u.surface, "'"));
      }
    }
  }

  Scheme scheme_;
  std::vector<Unit> units_;
  std::map<std::string, int> lookup_;
};

/// Unit-id sequence of one utterance.  Never contains the blank.
struct EncodedSequence {
  std::vector<int> ids;
  std::string text;
};

/// Builds the inventory observed in `transcripts` under `scheme`.  For the
/// initial-marking schemes every observed letter gets all of its positional
/// variants, so the inventory does not depend on where a letter happened to
/// occur.
inline Inventory BuildInventory(std::span<const std::string> transcripts,
                                Scheme scheme) {
  std::map<std::string, UnitKind> seen;
  std::set<char> letters;
  for (std::size_t n = 0; n < transcripts.size(); ++n) {
    std::string norm;
    try {
      norm = NormalizeText(transcripts[n]);
    } catch (const DataError &e) {
      throw DataError(StrCat(e.what(), " in utterance ", n, ": \"",
                             transcripts[n], "\""));
    }
    for (auto &p : detail::SegmentText(norm, scheme)) {
      for (char c : p.surface) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
          letters.insert(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
      }
      seen.emplace(std::move(p.surface), p.kind);
    }
  }
  for (char c : letters) {
    seen.emplace(std::string(1, c), UnitKind::kInteriorLetter);
    if (scheme != Scheme::kExplicitSpace) {
      seen.emplace(std::string(1, detail::Upper(c)), UnitKind::kInitialLetter);
    }
    if (scheme == Scheme::kInitialAndFinal) {
      seen.emplace(std::string{c, '$'}, UnitKind::kFinalLetter);
    }
  }
  std::vector<Unit> units;
  for (auto &[surface, kind] : seen) units.push_back({0, surface, kind});
  return Inventory(scheme, std::move(units));
}

/// Text -> unit ids.  Text is normalized first.  A double letter missing from
/// the inventory falls back to two single letters.
inline EncodedSequence Encode(std::string_view text, const Inventory &inv) {
  EncodedSequence seq;
  seq.text = NormalizeText(text);
  if (seq.text.empty()) throw DataError("cannot encode empty text");
  for (const auto &p : detail::SegmentText(seq.text, inv.scheme())) {
    if (auto id = inv.Find(p.surface)) {
      seq.ids.push_back(*id);
      continue;
    }
    if (p.kind == UnitKind::kDoubleLetter) {
      auto single = inv.Find(p.surface.substr(0, 1));
      if (single) {
        seq.ids.push_back(*single);
        seq.ids.push_back(*single);
        continue;
      }
    }
    throw DataError(StrCat("no unit for '", p.surface, "' in \"", seq.text, "\""));
  }
  return seq;
}

/// Unit ids -> readable text.  Inverse of Encode on its outputs.
inline std::string DecodeIds(std::span<const int> ids, const Inventory &inv) {
  std::string out;
  for (int id : ids) {
    const Unit &u = inv.unit(id);
    switch (u.kind) {
      case UnitKind::kBlank:
        throw DataError("blank id in a collapsed unit sequence");
      case UnitKind::kFinalLetter:
        out += u.surface[0];
        break;
      case UnitKind::kOther:
        out += u.surface == kSpaceSurface ? std::string(" ") : u.surface;
        break;
      default:
        if (IsWordInitial(u) && !out.empty()) out += ' ';
        for (char c : u.surface) {
          out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
  }
  if (inv.scheme() == Scheme::kExplicitSpace) return NormalizeText(out);
  return out;
}

}  // namespace ctcasr

#endif  // CTCASR_INVENTORY_HPP_
