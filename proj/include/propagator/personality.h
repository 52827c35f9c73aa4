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

#ifndef PROPAGATOR_PERSONALITY_H_
#define PROPAGATOR_PERSONALITY_H_

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace propagator {

// Lowercased word tokens. Splits on anything that is not a letter or digit,
// keeps a leading "@"/"#" and apostrophes between letters ("can't").
std::vector<std::string> tokenize(std::string_view text);

struct LexiconCategory {
  std::string name;
  std::vector<std::string> literals;  // sorted, unique
  std::vector<std::string> prefixes;  // from "term*", sorted, unique

  bool matches(std::string_view token) const;
};

// Word-category dictionary. Categories keep file order.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<LexiconCategory> categories);

  const std::vector<LexiconCategory>& categories() const { return categories_; }
  std::size_t category_count() const { return categories_.size(); }
  // -1 when absent.
  int index_of(std::string_view name) const;

 private:
  std::vector<LexiconCategory> categories_;
};

Lexicon parse_lexicon(std::string_view text);
Lexicon load_lexicon(const std::filesystem::path& path);

struct CategoryScores {
  Eigen::VectorXd scores;  // aligned with Lexicon::categories()
  std::size_t token_total = 0;
};

// score(c) = matching tokens / max(1, token count).
CategoryScores score_categories(const std::vector<std::string>& tokens, const Lexicon& lexicon);

inline constexpr std::size_t kBig5Count = 5;
inline constexpr std::size_t kFacetCount = 30;
inline constexpr std::size_t kTraitCount = kBig5Count + kFacetCount;

// Five dimensions followed by their six facets each, in dimension order.
const std::array<std::string_view, kTraitCount>& trait_names();

struct TraitScores {
  std::array<double, kBig5Count> big5{};
  std::array<double, kFacetCount> facets{};

  double operator[](std::size_t i) const { return i < kBig5Count ? big5[i] : facets[i - kBig5Count]; }
};

struct TraitFormula {
  double intercept = 0.0;
  std::map<std::string, double> weights;  // category name -> weight
};

// Linear map from category scores to traits. Traits missing from the map
// evaluate to 0.
struct TraitMapping {
  std::map<std::string, TraitFormula> traits;
};

TraitMapping parse_trait_mapping(std::string_view json_text);
TraitMapping load_trait_mapping(const std::filesystem::path& path);

// output = intercept + sum_c weight_c * score_c. Throws UnknownCategory.
TraitScores derive_traits(const CategoryScores& scores, const Lexicon& lexicon,
                          const TraitMapping& mapping);

std::filesystem::path default_data_dir();
const Lexicon& default_lexicon();
const TraitMapping& default_trait_mapping();

}  // namespace propagator

#endif  // PROPAGATOR_PERSONALITY_H_
