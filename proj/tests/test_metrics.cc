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

#include "fixtures.h"
#include "oracles.h"
#include "propagator/metrics.h"

namespace propagator {
namespace {

using testing::error_code;
using testing::make_table;
using testing::pairwise_auc;

std::vector<ScoredLabel> random_instance(Rng& rng) {
  const auto n = 2 + rng.below(199);
  std::vector<ScoredLabel> s;
  for (uint64_t i = 0; i < n; ++i)
    s.push_back({static_cast<double>(rng.below(12)) / 11.0, static_cast<int>(rng.below(2))});
  s[0].label = 1;
  s[1].label = 0;
  return s;
}

TEST(Auc, MatchesPairwiseCountingExactly) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_instance(rng);
    EXPECT_EQ(auc(s), pairwise_auc(s)) << "trial " << trial;
  }
}

TEST(Auc, LabelFlipIdentity) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_instance(rng);
    const double a = auc(s);
    for (auto& x : s) x.label = 1 - x.label;
    EXPECT_NEAR(auc(s), 1.0 - a, 1e-12);
  }
}

TEST(Auc, ExamplesAndErrors) {
  EXPECT_EQ(auc({{0.9, 1}, {0.8, 1}, {0.1, 0}, {0.2, 0}}), 1.0);
  EXPECT_EQ(auc({{0.5, 1}, {0.5, 0}, {0.5, 0}}), 0.5);
  EXPECT_EQ(auc({{0.8, 1}, {0.4, 1}, {0.6, 0}, {0.2, 0}}), 0.75);
  EXPECT_EQ(error_code([] { auc({{0.1, 1}, {0.2, 1}}); }), "SingleClass");
}

TEST(F1, RetweeterAndOverall) {
  Confusion c{3, 1, 94, 2};
  EXPECT_NEAR(f1(c, F1Mode::kRetweeter), 2 * (0.75 * 0.6) / (0.75 + 0.6), 1e-12);
  // Per-class F1 weighted by true class frequency.
  const double f_pos = 2.0 * 3 / (2.0 * 3 + 1 + 2);
  const double f_neg = 2.0 * 94 / (2.0 * 94 + 2 + 1);
  EXPECT_NEAR(f1(c, F1Mode::kOverallWeighted), (5 * f_pos + 95 * f_neg) / 100, 1e-12);
  EXPECT_EQ(f1(Confusion{0, 0, 95, 5}, F1Mode::kRetweeter), 0.0);
  EXPECT_EQ(f1(Confusion{0, 7, 88, 5}, F1Mode::kRetweeter), 0.0);
  EXPECT_EQ(f1(Confusion{5, 0, 95, 0}, F1Mode::kRetweeter), 1.0);
  EXPECT_EQ(f1(Confusion{5, 0, 95, 0}, F1Mode::kOverallWeighted), 1.0);
}

TEST(F1, ZeroTruePositivesAlwaysZero) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> pred, label;
    for (int i = 0; i < 50; ++i) {
      label.push_back(static_cast<int>(rng.below(2)));
      pred.push_back(label.back() == 1 ? 0 : static_cast<int>(rng.below(2)));
    }
    EXPECT_EQ(f1(pred, label, F1Mode::kRetweeter), 0.0);
  }
  const auto c = confusion({1, 0, 1, 0}, {1, 1, 0, 0});
  EXPECT_EQ(c.tp, 1);
  EXPECT_EQ(c.fn, 1);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.tn, 1);
}

TEST(Report, RowFormat) {
  EvalReport r;
  r.kind = ModelKind::kRandomForest;
  r.auc = 0.78512;
  r.f1_overall = 0.8149;
  r.f1_retweeter = 0.2961;
  EXPECT_EQ(r.row(), "Random Forest 0.785 0.815 0.296");
  EXPECT_EQ(setting_label(ImbalanceSetting::parse("weighted:30")), "cost_sensitive(30)");
  const auto table = render_report_table({{"Basic", {r}}}, true);
  EXPECT_NE(table.find("AUC"), std::string::npos);
  EXPECT_NE(table.find("F1 of Retweeter"), std::string::npos);
  EXPECT_NE(table.find("SMO"), std::string::npos);
  EXPECT_EQ(render_report_table({{"Basic", {r}}}, false).find("SMO"), std::string::npos);
}

FeatureTable blobs(int n, uint64_t seed, double shift) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 4 == 0;
    x(i, 0) = rng.normal() + shift * y[i];
    x(i, 1) = rng.normal();
  }
  return make_table(x, y);
}

TEST(Evaluate, PerfectAndUninformativeModels) {
  const auto t = blobs(80, 1, 20.0);
  const auto m = train(ModelSpec{}, t);
  const auto r = evaluate(m, t);
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.f1_overall, 1.0);
  EXPECT_EQ(r.f1_retweeter, 1.0);
  EXPECT_EQ(r.n_test, 80);

  auto flat = m;
  DecisionTree half;
  half.nodes.push_back({});
  half.nodes[0].counts = {1, 1};
  flat.params = ForestParams{{half}};
  EXPECT_EQ(evaluate(flat, t).auc, 0.5);
}

TEST(Evaluate, GridProducesThreeGroups) {
  const auto train_t = blobs(120, 2, 1.5);
  const auto test_t = blobs(60, 3, 1.5);
  GridOptions g;
  g.seed = 4;
  g.base_spec.trees = 10;
  g.ratios = {10, 30};
  const auto groups = evaluate_grid(train_t, test_t, g);
  ASSERT_EQ(groups.size(), 3u);
  for (const auto& grp : groups) EXPECT_EQ(grp.rows.size(), 4u);
  EXPECT_EQ(groups[0].rows[0].setting, "basic");
  EXPECT_EQ(groups[1].rows[0].setting, "smote");
  for (const auto& r : groups[2].rows)
    EXPECT_TRUE(r.setting == "cost_sensitive(10)" || r.setting == "cost_sensitive(30)") << r.setting;
  const auto csv = render_report_csv(groups);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
}

}  // namespace
}  // namespace propagator
