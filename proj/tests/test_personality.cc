/*
 * Copyright 2026 The Propagator Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "propagator/personality.h"
#include "propagator/util.h"

namespace propagator {
namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, Basics) {
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("I can't stop CRYING"), (Tokens{"i", "can't", "stop", "crying"}));
  EXPECT_EQ(tokenize("@Bob, see #Flu!!"), (Tokens{"@bob", "see", "#flu"}));
  // A typographic apostrophe folds to ASCII.
  EXPECT_EQ(tokenize("don’t  panic"), (Tokens{"don't", "panic"}));
  EXPECT_EQ(tokenize("'quoted' words'"), (Tokens{"quoted", "words"}));
}

TEST(Tokenize, HandCountedParagraph) {
  const std::string paragraph =
      "Storm warning tonight: stay indoors, check on your neighbors, and don't drive unless it's "
      "urgent. Power crews are standing by; shelters open at 6 pm downtown. Share this with "
      "friends who can't see the news right now!";
  EXPECT_EQ(tokenize(paragraph).size(), 37u);
}

TEST(Lexicon, ParsesTermsAndPrefixes) {
  const auto lex = parse_lexicon("# comment\nsadness: cry, cries, crying\ncognitive: understand*, know\n"
                                 "affect: cry, happy\n");
  ASSERT_EQ(lex.category_count(), 3u);
  const auto& sad = lex.categories()[0];
  EXPECT_EQ(sad.name, "sadness");
  EXPECT_EQ(sad.literals.size() + sad.prefixes.size(), 3u);
  EXPECT_TRUE(lex.categories()[1].matches("understanding"));
  EXPECT_FALSE(lex.categories()[1].matches("misunderstand"));
  EXPECT_TRUE(lex.categories()[0].matches("cry"));
  EXPECT_TRUE(lex.categories()[2].matches("cry"));
  EXPECT_EQ(lex.index_of("affect"), 2);
  EXPECT_EQ(lex.index_of("nope"), -1);
}

TEST(Lexicon, Errors) {
  auto code = [](const char* text) {
    try {
      parse_lexicon(text);
    } catch (const Error& e) {
      return e.code();
    }
    return std::string("none");
  };
  EXPECT_EQ(code("no colon here\n"), "MalformedLexicon");
  EXPECT_EQ(code(": a, b\n"), "MalformedLexicon");
  EXPECT_EQ(code("empty:\n"), "EmptyCategory");
}

TEST(ScoreCategories, Fractions) {
  const auto lex = parse_lexicon("sadness: cry, sad\nother: zzz\n");
  const Tokens tokens = {"i", "cry", "a", "lot", "sad", "day", "x", "y", "z", "w"};
  const auto s = score_categories(tokens, lex);
  EXPECT_EQ(s.token_total, 10u);
  EXPECT_DOUBLE_EQ(s.scores[0], 0.2);
  EXPECT_DOUBLE_EQ(s.scores[1], 0.0);
  const auto empty = score_categories({}, lex);
  EXPECT_EQ(empty.token_total, 0u);
  EXPECT_EQ(empty.scores.sum(), 0.0);
}

// Straight token-by-token, category-by-category scan.
std::vector<double> brute_force_scores(const Tokens& tokens,
                                       const std::vector<std::pair<std::string, Tokens>>& cats) {
  std::vector<double> out;
  for (const auto& [name, terms] : cats) {
    double hits = 0;
    for (const auto& t : tokens) {
      bool match = false;
      for (const auto& term : terms) {
        if (!term.empty() && term.back() == '*') match |= t.rfind(term.substr(0, term.size() - 1), 0) == 0;
        else match |= t == term;
      }
      hits += match;
    }
    out.push_back(tokens.empty() ? 0.0 : hits / static_cast<double>(tokens.size()));
  }
  return out;
}

TEST(ScoreCategories, MatchesBruteForceOracle) {
  const std::vector<std::pair<std::string, Tokens>> cats = {
      {"a", {"storm", "rain*", "wind"}}, {"b", {"help", "safe*"}}, {"c", {"rain", "news", "n*"}}};
  std::string text;
  for (const auto& [name, terms] : cats) {
    text += name + ":";
    for (std::size_t i = 0; i < terms.size(); ++i) text += (i ? ", " : " ") + terms[i];
    text += "\n";
  }
  const auto lex = parse_lexicon(text);
  const Tokens vocab = {"storm", "rain", "rainy", "raining", "wind", "help", "helper", "safe",
                        "safety", "news", "night", "no", "go", "train", "a", "windy"};
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tokens tokens;
    for (int i = 0; i < 50; ++i) tokens.push_back(vocab[rng.below(vocab.size())]);
    const auto got = score_categories(tokens, lex);
    const auto want = brute_force_scores(tokens, cats);
    for (std::size_t c = 0; c < want.size(); ++c) EXPECT_DOUBLE_EQ(got.scores[static_cast<Eigen::Index>(c)], want[c]);
  }
}

TEST(Traits, NamesAndBundledMapping) {
  EXPECT_EQ(trait_names().size(), 35u);
  EXPECT_EQ(trait_names()[0], "openness");
  const auto& lex = default_lexicon();
  EXPECT_EQ(lex.category_count(), 68u);
  const auto& m = default_trait_mapping();
  EXPECT_EQ(m.traits.size(), 35u);
  for (const auto& [trait, formula] : m.traits)
    for (const auto& [cat, w] : formula.weights) EXPECT_GE(lex.index_of(cat), 0) << trait << " -> " << cat;
}

TEST(Traits, ZeroScoresGiveIntercepts) {
  const auto& lex = default_lexicon();
  const auto& m = default_trait_mapping();
  CategoryScores zero{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lex.category_count())), 0};
  const auto t = derive_traits(zero, lex, m);
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    const auto it = m.traits.find(std::string(trait_names()[i]));
    EXPECT_DOUBLE_EQ(t[i], it == m.traits.end() ? 0.0 : it->second.intercept);
  }
}

TEST(Traits, IdentityMapping) {
  const auto lex = parse_lexicon("sadness: sad\nfun: joy\n");
  TraitMapping m;
  m.traits["neuroticism"] = TraitFormula{0.0, {{"sadness", 1.0}}};
  CategoryScores s{Eigen::Vector2d(0.3, 0.9), 10};
  const auto t = derive_traits(s, lex, m);
  const auto idx = static_cast<std::size_t>(
      std::find(trait_names().begin(), trait_names().end(), "neuroticism") - trait_names().begin());
  EXPECT_DOUBLE_EQ(t[idx], 0.3);
}

TEST(Traits, RandomMappingMatchesDotProduct) {
  const auto& lex = default_lexicon();
  Rng rng(17);
  TraitMapping m;
  std::vector<std::vector<std::pair<int, double>>> oracle(kTraitCount);
  std::vector<double> intercepts(kTraitCount);
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    TraitFormula f;
    f.intercept = rng.normal();
    intercepts[t] = f.intercept;
    for (int k = 0; k < 4; ++k) {
      const auto c = static_cast<int>(rng.below(lex.category_count()));
      const double w = rng.normal();
      if (f.weights.count(lex.categories()[static_cast<std::size_t>(c)].name)) continue;
      f.weights[lex.categories()[static_cast<std::size_t>(c)].name] = w;
      oracle[t].push_back({c, w});
    }
    m.traits[std::string(trait_names()[t])] = f;
  }
  CategoryScores s;
  s.scores.resize(static_cast<Eigen::Index>(lex.category_count()));
  for (Eigen::Index i = 0; i < s.scores.size(); ++i) s.scores[i] = rng.uniform();
  const auto got = derive_traits(s, lex, m);
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    double want = intercepts[t];
    for (const auto& [c, w] : oracle[t]) want += w * s.scores[c];
    EXPECT_NEAR(got[t], want, 1e-12);
  }
}

TEST(Traits, MappingErrors) {
  auto code = [](const char* text) {
    try {
      parse_trait_mapping(text);
    } catch (const Error& e) {
      return e.code();
    }
    return std::string("none");
  };
  EXPECT_EQ(code(R"({"not_a_trait": {"intercept": 0, "weights": {}}})"), "UnknownTrait");
  EXPECT_EQ(code("[1,2]"), "MalformedMapping");
  EXPECT_EQ(code("{"), "MalformedMapping");
  const auto lex = parse_lexicon("a: b\n");
  const auto m = parse_trait_mapping(R"({"openness": {"intercept": 0, "weights": {"zzz": 1}}})");
  CategoryScores s{Eigen::VectorXd::Zero(1), 0};
  try {
    derive_traits(s, lex, m);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "UnknownCategory");
  }
}

}  // namespace
}  // namespace propagator
