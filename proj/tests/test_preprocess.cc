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

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "fixtures.h"
#include "oracles.h"
#include "propagator/preprocess.h"
#include "propagator/util.h"

namespace propagator {
namespace {

using testing::make_table;
using testing::hand_chi2;
using testing::on_minority_segment;

TEST(EqualFrequencyBins, SplitsAndTies) {
  Eigen::VectorXd v(10);
  v << 5, 1, 9, 3, 7, 2, 8, 4, 6, 0;
  const auto b = equal_frequency_bins(v, 5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(b[static_cast<std::size_t>(i)], static_cast<int>(v[i]) / 2);
  Eigen::VectorXd ties(6);
  ties << 1, 1, 1, 1, 2, 3;
  const auto t = equal_frequency_bins(ties, 3);
  EXPECT_EQ(t, (std::vector<int>{0, 0, 0, 0, 2, 2}));
  EXPECT_THROW(equal_frequency_bins(v, 1), Error);
}

TEST(ChiSquared, TwoBinFixturesMatchHandOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::array<double, 2>> t(2);
    for (auto& r : t)
      for (auto& c : r) c = static_cast<double>(1 + rng.below(30));
    const auto got = chi_squared_statistic(t);
    EXPECT_NEAR(got.chi2, hand_chi2(t), 1e-9);
    EXPECT_EQ(got.dof, 1);
  }
}

TEST(ChiSquared, PerfectAssociationEqualsInstanceCount) {
  EXPECT_NEAR(chi_squared_statistic({{10, 0}, {0, 10}}).chi2, 20.0, 1e-12);
  Eigen::MatrixXd x(20, 1);
  Eigen::VectorXi y(20);
  for (int i = 0; i < 20; ++i) {
    y[i] = i % 2;
    x(i, 0) = y[i];
  }
  const auto scores = chi_squared_scores(make_table(x, y), 2);
  EXPECT_NEAR(scores[0].chi2, 20.0, 1e-12);
  EXPECT_TRUE(scores[0].selected);
}

TEST(ChiSquared, IndependentAndConstantFeatures) {
  Eigen::MatrixXd x(40, 2);
  Eigen::VectorXi y(40);
  for (int i = 0; i < 40; ++i) {
    y[i] = i % 2;
    x(i, 0) = (i / 2) % 2;  // balanced against the label
    x(i, 1) = 3.0;
  }
  const auto scores = chi_squared_scores(make_table(x, y), 2);
  for (const auto& s : scores) {
    EXPECT_NEAR(s.chi2, 0.0, 1e-12) << s.feature;
    EXPECT_FALSE(s.selected);
  }
}

TEST(ChiSquared, PValueFromOccupiedDegreesOfFreedom) {
  const std::vector<std::array<double, 2>> t = {{12, 3}, {0, 0}, {5, 9}, {8, 8}};
  const auto r = chi_squared_statistic(t);
  EXPECT_EQ(r.dof, 2);
  Eigen::MatrixXd x(45, 1);
  Eigen::VectorXi y(45);
  int row = 0;
  const double values[4] = {0, 1, 2, 3};
  for (int b = 0; b < 4; ++b)
    for (int c = 0; c < 2; ++c)
      for (int k = 0; k < static_cast<int>(t[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)]); ++k) {
        x(row, 0) = values[b];
        y[row++] = c;
      }
  // With three occupied distinct values and four bins, every value gets its own bin.
  const auto s = chi_squared_scores(make_table(x, y), 4)[0];
  EXPECT_NEAR(s.chi2, hand_chi2(t), 1e-9);
  const boost::math::chi_squared dist(2);
  EXPECT_NEAR(s.p_value, boost::math::cdf(boost::math::complement(dist, s.chi2)), 1e-12);
}

TEST(ChiSquared, RankingAndCsv) {
  Eigen::MatrixXd x(20, 3);
  Eigen::VectorXi y(20);
  for (int i = 0; i < 20; ++i) {
    y[i] = i < 10;
    x(i, 0) = 1.0;
    x(i, 1) = y[i];
    x(i, 2) = i < 10 ? (i < 8) : (i < 12);
  }
  const auto scores = chi_squared_scores(make_table(x, y), 2);
  EXPECT_EQ(scores[0].feature, "f1");
  EXPECT_EQ(scores[1].feature, "f2");
  EXPECT_EQ(scores[2].feature, "f0");
  EXPECT_EQ(selected_features(scores), (std::vector<std::string>{"f1", "f2"}));
  const auto csv = feature_scores_csv(scores);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "feature,chi2,p_value,selected");
  EXPECT_EQ(parse_feature_list("f1\nf2\n"), (std::vector<std::string>{"f1", "f2"}));
  EXPECT_EQ(parse_feature_list(csv), selected_features(scores));
}

TEST(Mask, SelectAllNoneAndSubset) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 129);
  const auto t = make_table(x, Eigen::VectorXi::Zero(5));
  EXPECT_EQ(apply_mask(t, t.feature_names).x, t.x);
  try {
    apply_mask(t, {});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "EmptyMask");
  }
  std::vector<std::string> pick;
  for (int i = 0; i < 21; ++i) pick.push_back("f" + std::to_string(128 - 6 * i));
  const auto m = apply_mask(t, pick);
  EXPECT_EQ(m.cols(), 21);
  EXPECT_EQ(m.feature_names.front(), "f8");  // table order, not request order
  EXPECT_EQ(m.x.col(0), t.x.col(8));
  EXPECT_THROW(apply_mask(t, {"zzz"}), Error);
}

FeatureTable imbalanced(int minority, int majority, int dims, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(minority + majority, dims);
  Eigen::VectorXi y(minority + majority);
  for (int i = 0; i < x.rows(); ++i) {
    y[i] = i < minority;
    for (int d = 0; d < dims; ++d) x(i, d) = rng.normal() + 2.0 * y[i];
  }
  return make_table(x, y);
}

TEST(Smote, BalancesBirdFluSizedTraining) {
  const auto t = imbalanced(103, 1136, 4, 1);
  const auto s = smote(t, 5, 7);
  EXPECT_EQ(s.count(1), 1136);
  EXPECT_EQ(s.count(0), 1136);
  EXPECT_EQ(s.x.topRows(t.rows()), t.x);
}

TEST(Smote, SyntheticRowsAreConvexCombinations) {
  const auto t = imbalanced(12, 60, 3, 2);
  const auto s = smote(t, 5, 3);
  const Eigen::MatrixXd minority = t.x.topRows(12);
  for (Eigen::Index r = t.rows(); r < s.rows(); ++r) {
    EXPECT_EQ(s.y[r], 1);
    EXPECT_TRUE(on_minority_segment(s.x.row(r), minority)) << "row " << r;
  }
}

TEST(Smote, OneDimensionalUnitInterval) {
  Eigen::MatrixXd x(7, 1);
  x << 0, 1, 5, 6, 7, 8, 9;
  Eigen::VectorXi y(7);
  y << 1, 1, 0, 0, 0, 0, 0;
  const auto s = smote(make_table(x, y), 1, 11);
  EXPECT_EQ(s.count(1), 5);
  for (Eigen::Index r = 7; r < s.rows(); ++r) {
    EXPECT_GE(s.x(r, 0), 0.0);
    EXPECT_LE(s.x(r, 0), 1.0);
  }
}

TEST(Smote, DeterministicPerSeed) {
  const auto t = imbalanced(20, 100, 3, 5);
  EXPECT_EQ(smote(t, 5, 1).x, smote(t, 5, 1).x);
  EXPECT_NE(smote(t, 5, 1).x, smote(t, 5, 2).x);
  try {
    smote(imbalanced(1, 10, 2, 1), 5, 1);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "TooFewMinority");
  }
}

TEST(ClassWeights, RatioAppliedToMinority) {
  const auto t = imbalanced(2, 5, 1, 1);
  const auto w = class_weights(t, 10);
  Eigen::VectorXd want(7);
  want << 10, 10, 1, 1, 1, 1, 1;
  EXPECT_EQ(w.weights, want);
  EXPECT_EQ(class_weights(t, 1).weights, Eigen::VectorXd::Ones(7));
  EXPECT_THROW(class_weights(t, 0.5), Error);
}

TEST(Imbalance, ParseAndGrid) {
  EXPECT_EQ(default_weight_grid().size(), 5u);
  const auto w = ImbalanceSetting::parse("weighted:30");
  EXPECT_EQ(w.kind, ImbalanceSetting::Kind::kWeighted);
  EXPECT_EQ(w.ratio, 30);
  EXPECT_EQ(w.to_string(), "weighted:30");
  EXPECT_EQ(ImbalanceSetting::parse("smote").kind, ImbalanceSetting::Kind::kSmote);
  EXPECT_EQ(ImbalanceSetting::parse("basic").kind, ImbalanceSetting::Kind::kBasic);
  EXPECT_THROW(ImbalanceSetting::parse("weighted:"), Error);
  EXPECT_THROW(ImbalanceSetting::parse("weighted:0.5"), Error);
  EXPECT_THROW(ImbalanceSetting::parse("other"), Error);
  const auto t = imbalanced(5, 20, 2, 1);
  EXPECT_EQ(apply_imbalance(t, ImbalanceSetting::parse("basic"), 1).x, t.x);
  EXPECT_EQ(apply_imbalance(t, w, 1).weights.head(5), Eigen::VectorXd::Constant(5, 30));
  EXPECT_EQ(minority_label(t), 1);
}

}  // namespace
}  // namespace propagator
