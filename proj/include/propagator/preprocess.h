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

#ifndef PROPAGATOR_PREPROCESS_H_
#define PROPAGATOR_PREPROCESS_H_

#include <array>
#include <string>
#include <vector>

#include "propagator/features.h"

namespace propagator {

inline constexpr int kDefaultChiSquaredBins = 10;
inline constexpr double kSelectionPValue = 0.05;
inline constexpr int kDefaultSmoteNeighbors = 5;

struct FeatureScore {
  std::string feature;
  double chi2 = 0.0;
  double p_value = 1.0;
  bool selected = false;
};

// Equal-frequency bin index per row. Equal values always share a bin, so
// the assignment depends only on the order of the values.
std::vector<int> equal_frequency_bins(const Eigen::Ref<const Eigen::VectorXd>& values, int bins);

// Pearson chi-squared of a (bins x 2) count table against its marginals,
// and the degrees of freedom counted over occupied rows.
struct ContingencyResult {
  double chi2 = 0.0;
  int dof = 0;
};
ContingencyResult chi_squared_statistic(const std::vector<std::array<double, 2>>& table);

// One score per column, ranked by chi2 descending then name.
std::vector<FeatureScore> chi_squared_scores(const FeatureTable& train,
                                             int bins = kDefaultChiSquaredBins);

std::vector<std::string> selected_features(const std::vector<FeatureScore>& scores);
std::string feature_scores_csv(const std::vector<FeatureScore>& scores);
std::vector<std::string> parse_feature_list(std::string_view text);

// Restricts columns to `selected`, keeping the table's column order.
// Throws EmptyMask, UnknownFeature.
FeatureTable apply_mask(const FeatureTable& table, const std::vector<std::string>& selected);
std::vector<int> mask_indices(const std::vector<std::string>& manifest,
                              const std::vector<std::string>& selected);

int minority_label(const FeatureTable& table);

// Appends synthetic minority rows x + u (x_nn - x) until the classes are
// balanced. Neighbours are found after min-max scaling fitted on the
// minority rows. Throws TooFewMinority.
FeatureTable smote(const FeatureTable& train, int k, uint64_t seed);

// Minority rows get weight `ratio`, majority rows weight 1.
FeatureTable class_weights(const FeatureTable& train, double ratio);

struct ImbalanceSetting {
  enum class Kind { kBasic, kSmote, kWeighted };
  Kind kind = Kind::kBasic;
  double ratio = 1.0;

  std::string to_string() const;
  static ImbalanceSetting parse(std::string_view text);  // basic | smote | weighted:R

  bool operator==(const ImbalanceSetting&) const = default;
};

inline const std::vector<double>& default_weight_grid() {
  static const std::vector<double> grid = {10, 20, 30, 40, 50};
  return grid;
}

FeatureTable apply_imbalance(const FeatureTable& train, const ImbalanceSetting& setting,
                             uint64_t seed, int smote_k = kDefaultSmoteNeighbors);

}  // namespace propagator

#endif  // PROPAGATOR_PREPROCESS_H_
