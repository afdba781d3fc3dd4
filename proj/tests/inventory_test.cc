// tests/inventory_test.cc

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

#include "ctcasr/inventory.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_util.hpp"

namespace ctcasr {
namespace {

std::vector<std::string> Surfaces(const EncodedSequence &seq, const Inventory &inv) {
  std::vector<std::string> out;
  for (int id : seq.ids) out.push_back(inv.unit(id).surface);
  return out;
}

Inventory FullInventory(Scheme scheme = Scheme::kCapitalInitial) {
  return BuildInventory(testing::AlphabetCorpus(), scheme);
}

TEST(NormalizeText, LowercasesStripsAndCollapses) {
  EXPECT_EQ(NormalizeText("  Hello,  World! "), "hello world");
  EXPECT_EQ(NormalizeText("we'd"), "we'd");
  EXPECT_EQ(NormalizeText("dogs' toys"), "dogs toys");
  EXPECT_EQ(NormalizeText("''tis"), "'tis");
  EXPECT_THROW(NormalizeText("room 101"), DataError);
}

TEST(BuildInventory, WorkedExampleCorpus) {
  const std::vector<std::string> corpus{"yes he has one"};
  const Inventory inv = BuildInventory(corpus, Scheme::kCapitalInitial);
  for (const char *s : {"Y", "e", "s", "H", "h", "a", "O", "n"}) {
    EXPECT_TRUE(inv.Find(s).has_value()) << s;
  }
  EXPECT_EQ(inv.unit(0).surface, "<blank>");
  // Every interior letter has its word-initial variant.
  for (const auto &u : inv.units()) {
    if (u.kind == UnitKind::kInteriorLetter) {
      EXPECT_TRUE(inv.Find(std::string(1, static_cast<char>(std::toupper(u.surface[0])))));
    }
  }
}

TEST(BuildInventory, DoubleLetterAndInitial) {
  const std::vector<std::string> corpus{"hello"};
  const Inventory inv = BuildInventory(corpus, Scheme::kCapitalInitial);
  EXPECT_TRUE(inv.Find("ll"));
  EXPECT_TRUE(inv.Find("H"));
  EXPECT_EQ(inv.unit(*inv.Find("ll")).kind, UnitKind::kDoubleLetter);
}

TEST(BuildInventory, EmptyCorpusIsBlankOnly) {
  const Inventory inv = BuildInventory({}, Scheme::kCapitalInitial);
  EXPECT_EQ(inv.size(), 1);
}

TEST(BuildInventory, RejectsUnsupportedCharacterNamingUtterance) {
  const std::vector<std::string> corpus{"fine", "bad 4 u"};
  try {
    BuildInventory(corpus, Scheme::kCapitalInitial);
    FAIL();
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("'4'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("utterance 1"), std::string::npos);
  }
}

TEST(BuildInventory, OrderIndependentAndIdempotent) {
  std::vector<std::string> corpus{"the cat", "a llama's ball", "zoo keeper"};
  const Inventory a = BuildInventory(corpus, Scheme::kCapitalInitial);
  std::reverse(corpus.begin(), corpus.end());
  corpus.push_back("the cat");
  EXPECT_EQ(a, BuildInventory(corpus, Scheme::kCapitalInitial));
}

TEST(BuildInventory, SortedAfterBlank) {
  const Inventory inv = FullInventory();
  for (int i = 2; i < inv.size(); ++i) EXPECT_LT(inv.unit(i - 1).surface, inv.unit(i).surface);
}

TEST(Encode, WorkedExamples) {
  const Inventory inv = FullInventory();
  EXPECT_EQ(Surfaces(Encode("yes he has one", inv), inv),
            (std::vector<std::string>{"Y", "e", "s", "H", "e", "H", "a", "s", "O", "n", "e"}));
  EXPECT_EQ(Surfaces(Encode("hello", inv), inv), (std::vector<std::string>{"H", "e", "ll", "o"}));
  EXPECT_EQ(Surfaces(Encode("we'd", inv), inv), (std::vector<std::string>{"W", "e", "'d"}));
  EXPECT_EQ(Surfaces(Encode("a", inv), inv), (std::vector<std::string>{"A"}));
}

TEST(Encode, RunsAndInitialDoubles) {
  const Inventory inv = FullInventory();
  EXPECT_EQ(Surfaces(Encode("eel", inv), inv), (std::vector<std::string>{"E", "e", "l"}));
  EXPECT_EQ(Surfaces(Encode("alll", inv), inv), (std::vector<std::string>{"A", "ll", "l"}));
  EXPECT_EQ(Surfaces(Encode("allll", inv), inv), (std::vector<std::string>{"A", "ll", "ll"}));
}

TEST(Encode, Errors) {
  const Inventory inv = BuildInventory(std::vector<std::string>{"abc"}, Scheme::kCapitalInitial);
  EXPECT_THROW(Encode("", inv), DataError);
  EXPECT_THROW(Encode("  ", inv), DataError);
  try {
    Encode("abz", inv);
    FAIL();
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
  }
}

TEST(Encode, MissingDoubleFallsBackToSingles) {
  const Inventory inv = BuildInventory(std::vector<std::string>{"al"}, Scheme::kCapitalInitial);
  const auto seq = Encode("all", inv);
  EXPECT_EQ(Surfaces(seq, inv), (std::vector<std::string>{"A", "l", "l"}));
  EXPECT_EQ(DecodeIds(seq.ids, inv), "all");
}

TEST(DecodeIds, WorkedExampleInverted) {
  const Inventory inv = FullInventory();
  std::vector<int> ids;
  for (const char *s : {"Y", "e", "s", "H", "e", "H", "a", "s", "O", "n", "e"}) ids.push_back(*inv.Find(s));
  EXPECT_EQ(DecodeIds(ids, inv), "yes he has one");
  EXPECT_EQ(DecodeIds(std::vector<int>{}, inv), "");
  EXPECT_THROW(DecodeIds(std::vector<int>{inv.size()}, inv), DataError);
  EXPECT_THROW(DecodeIds(std::vector<int>{kBlankId}, inv), DataError);
}

TEST(Codec, RoundTripAllSchemes) {
  std::mt19937_64 rng(7);
  for (Scheme scheme : {Scheme::kCapitalInitial, Scheme::kExplicitSpace, Scheme::kInitialAndFinal}) {
    const Inventory inv = FullInventory(scheme);
    for (int i = 0; i < 2000; ++i) {
      const std::string text = testing::RandomText(rng);
      const EncodedSequence seq = Encode(text, inv);
      ASSERT_EQ(DecodeIds(seq.ids, inv), text) << SchemeName(scheme);
      const auto spaces = static_cast<std::size_t>(std::count(text.begin(), text.end(), ' '));
      const std::size_t letters = text.size() - spaces;
      ASSERT_LE(seq.ids.size(), scheme == Scheme::kExplicitSpace ? letters + spaces : letters);
      for (int id : seq.ids) ASSERT_NE(id, kBlankId);
    }
  }
}

TEST(Codec, ExplicitSpaceAndInitialFinalSurfaces) {
  const Inventory es = FullInventory(Scheme::kExplicitSpace);
  EXPECT_EQ(Surfaces(Encode("yes he", es), es), (std::vector<std::string>{"y", "e", "s", "_", "h", "e"}));
  const Inventory fi = FullInventory(Scheme::kInitialAndFinal);
  EXPECT_EQ(Surfaces(Encode("yes a hall", fi), fi),
            (std::vector<std::string>{"Y", "e", "s$", "A", "H", "a", "ll"}));
}

TEST(InventoryFile, BitExactRoundTrip) {
  for (Scheme scheme : {Scheme::kCapitalInitial, Scheme::kExplicitSpace, Scheme::kInitialAndFinal}) {
    const Inventory inv = FullInventory(scheme);
    std::ostringstream a;
    inv.Write(a);
    std::istringstream in(a.str());
    const Inventory back = Inventory::Read(in);
    EXPECT_EQ(back, inv);
    std::ostringstream b;
    back.Write(b);
    EXPECT_EQ(a.str(), b.str());
  }
  std::ostringstream os;
  FullInventory().Write(os);
  EXPECT_EQ(os.str().substr(0, 16), "0\t<blank>\tblank\n");
}

TEST(InventoryFile, RejectsMalformed) {
  std::istringstream no_blank("0\ta\tinterior\n");
  EXPECT_THROW(Inventory::Read(no_blank), DataError);
  std::istringstream gap("0\t<blank>\tblank\n2\ta\tinterior\n");
  EXPECT_THROW(Inventory::Read(gap), DataError);
  std::istringstream dup("0\t<blank>\tblank\n1\ta\tinterior\n2\ta\tinterior\n");
  EXPECT_THROW(Inventory::Read(dup), DataError);
}

}  // namespace
}  // namespace ctcasr
