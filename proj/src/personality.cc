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

#include "propagator/personality.h"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "propagator/util.h"

namespace propagator {

namespace {

// Decodes one code point starting at s[i]; advances i. Invalid bytes are
// returned as U+FFFD.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int extra = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + extra >= s.size()) {
    i = s.size();
    return 0xFFFD;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      i += k;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') ||
           cp == '_';
  }
  if (cp == 0xFFFD) return false;
  if (cp >= 0x80 && cp <= 0xBF) return false;     // Latin-1 punctuation and symbols
  if (cp == 0xD7 || cp == 0xF7) return false;     // multiplication and division signs
  if (cp >= 0x2000 && cp <= 0x2BFF) return false; // general punctuation, arrows, symbols
  if (cp >= 0x3000 && cp <= 0x303F) return false; // CJK punctuation
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji
  if (cp == 0xFE0F || cp == 0x200D) return false;
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) cps.push_back(next_code_point(text, i));

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    const bool next_is_word = i + 1 < cps.size() && is_word_char(cps[i + 1]);
    if (is_word_char(cp)) {
      append_utf8(current, to_lower(cp));
    } else if ((cp == '@' || cp == '#') && current.empty() && next_is_word) {
      current += static_cast<char>(cp);
    } else if (is_apostrophe(cp) && !current.empty() && next_is_word &&
               current.back() != '@' && current.back() != '#') {
      current += '\'';
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

bool LexiconCategory::matches(std::string_view token) const {
  if (std::binary_search(literals.begin(), literals.end(), token)) return true;
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return token.starts_with(p); });
}

Lexicon::Lexicon(std::vector<LexiconCategory> categories) : categories_(std::move(categories)) {}

int Lexicon::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < categories_.size(); ++i)
    if (categories_[i].name == name) return static_cast<int>(i);
  return -1;
}

Lexicon parse_lexicon(std::string_view text) {
  std::vector<LexiconCategory> categories;
  std::vector<std::set<std::string>> literals, prefixes;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos)
      throw Error("MalformedLexicon", "line " + std::to_string(line_no) + ": missing ':'");
    auto name = std::string(trim(line.substr(0, colon)));
    if (name.empty())
      throw Error("MalformedLexicon", "line " + std::to_string(line_no) + ": empty category name");
    std::size_t idx = 0;
    while (idx < categories.size() && categories[idx].name != name) ++idx;
    if (idx == categories.size()) {
      categories.push_back({name, {}, {}});
      literals.emplace_back();
      prefixes.emplace_back();
    }
    for (const auto& raw_term : split(line.substr(colon + 1), ',')) {
      auto term = to_lower_ascii(trim(raw_term));
      if (term.empty()) continue;
      if (term.back() == '*') {
        term.pop_back();
        if (term.empty())
          throw Error("MalformedLexicon", "line " + std::to_string(line_no) + ": bare '*'");
        prefixes[idx].insert(term);
      } else {
        literals[idx].insert(term);
      }
    }
  }
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (literals[i].empty() && prefixes[i].empty()) throw Error("EmptyCategory", categories[i].name);
    categories[i].literals.assign(literals[i].begin(), literals[i].end());
    categories[i].prefixes.assign(prefixes[i].begin(), prefixes[i].end());
  }
  return Lexicon(std::move(categories));
}

Lexicon load_lexicon(const std::filesystem::path& path) { return parse_lexicon(read_file(path)); }

CategoryScores score_categories(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  const auto& cats = lexicon.categories();
  CategoryScores out;
  out.scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cats.size()));
  out.token_total = tokens.size();
  // Memoized per distinct token; timelines repeat words heavily.
  std::unordered_map<std::string_view, std::vector<Eigen::Index>> memo;
  for (const auto& t : tokens) {
    auto [it, inserted] = memo.try_emplace(t);
    if (inserted)
      for (std::size_t c = 0; c < cats.size(); ++c)
        if (cats[c].matches(t)) it->second.push_back(static_cast<Eigen::Index>(c));
    for (auto c : it->second) out.scores[c] += 1.0;
  }
  out.scores /= static_cast<double>(std::max<std::size_t>(1, tokens.size()));
  return out;
}

const std::array<std::string_view, kTraitCount>& trait_names() {
  static const std::array<std::string_view, kTraitCount> names = {
      "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism",
      // openness
      "imagination", "artistic_interests", "emotionality", "adventurousness", "intellect",
      "liberalism",
      // conscientiousness
      "self_efficacy", "orderliness", "dutifulness", "achievement_striving", "self_discipline",
      "cautiousness",
      // extraversion
      "friendliness", "gregariousness", "assertiveness", "activity_level", "excitement_seeking",
      "cheerfulness",
      // agreeableness
      "trust", "morality", "altruism", "cooperation", "modesty", "sympathy",
      // neuroticism
      "anxiety", "anger", "depression", "self_consciousness", "immoderation", "vulnerability"};
  return names;
}

TraitMapping parse_trait_mapping(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("MalformedMapping", e.what());
  }
  if (!j.is_object()) throw Error("MalformedMapping", "top level must be an object");
  const auto& names = trait_names();
  TraitMapping mapping;
  for (const auto& [trait, body] : j.items()) {
    if (std::find(names.begin(), names.end(), trait) == names.end())
      throw Error("UnknownTrait", trait);
    if (!body.is_object()) throw Error("MalformedMapping", trait + " must be an object");
    TraitFormula f;
    try {
      f.intercept = body.value("intercept", 0.0);
      if (body.contains("weights"))
        for (const auto& [cat, w] : body.at("weights").items()) f.weights[cat] = w.get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("MalformedMapping", trait + ": " + e.what());
    }
    mapping.traits[trait] = std::move(f);
  }
  return mapping;
}

TraitMapping load_trait_mapping(const std::filesystem::path& path) {
  return parse_trait_mapping(read_file(path));
}

TraitScores derive_traits(const CategoryScores& scores, const Lexicon& lexicon,
                          const TraitMapping& mapping) {
  TraitScores out;
  const auto& names = trait_names();
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    double value = 0.0;
    auto it = mapping.traits.find(std::string(names[t]));
    if (it != mapping.traits.end()) {
      value = it->second.intercept;
      for (const auto& [cat, w] : it->second.weights) {
        const int idx = lexicon.index_of(cat);
        if (idx < 0 || idx >= scores.scores.size()) throw Error("UnknownCategory", cat);
        value += w * scores.scores[idx];
      }
    }
    if (t < kBig5Count) out.big5[t] = value;
    else out.facets[t - kBig5Count] = value;
  }
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PROPAGATOR_DATA_DIR")) return env;
  return PROPAGATOR_DATA_DIR;
}

const Lexicon& default_lexicon() {
  static const Lexicon lexicon = load_lexicon(default_data_dir() / "lexicon.txt");
  return lexicon;
}

const TraitMapping& default_trait_mapping() {
  static const TraitMapping mapping = load_trait_mapping(default_data_dir() / "trait_mapping.json");
  return mapping;
}

}  // namespace propagator
