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

#ifndef PROPAGATOR_METRICS_H_
#define PROPAGATOR_METRICS_H_

#include <optional>
#include <string>
#include <vector>

#include "propagator/classify.h"
#include "propagator/features.h"

namespace propagator {

struct ScoredLabel {
  double score = 0.0;
  int label = 0;  // 1 = retweeter
};

// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
// ties counted as half. Throws SingleClass.
double auc(const std::vector<ScoredLabel>& scores);

struct Confusion {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  int64_t total() const { return tp + fp + tn + fn; }
};

Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

enum class F1Mode { kOverallWeighted, kRetweeter };

// Retweeter: F1 of the positive class (0 when tp = 0). Overall: per-class F1
// weighted by true class frequency.
double f1(const Confusion& c, F1Mode mode);
double f1(const std::vector<int>& predictions, const std::vector<int>& labels, F1Mode mode);

struct EvalReport {
  std::string model_id;
  ModelKind kind = ModelKind::kRandomForest;
  std::string setting;  // basic | smote | cost_sensitive(R)
  double auc = 0.0;
  double f1_overall = 0.0;
  double f1_retweeter = 0.0;
  Confusion counts;
  int64_t n_test = 0;

  // "<kind> <auc> <f1> <f1_retweeter>", three decimals.
  std::string row() const;
};

std::string setting_label(const ImbalanceSetting& s);

EvalReport evaluate(const TrainedModel& model, const FeatureTable& test, double threshold = 0.5);

// Rows grouped by setting (Basic, SMOTE, Cost-Sensitive), one per model kind.
struct ReportGroup {
  std::string title;
  std::vector<EvalReport> rows;
};

std::string render_report_table(const std::vector<ReportGroup>& groups, bool include_svm_placeholder);
std::string render_report_csv(const std::vector<ReportGroup>& groups);

struct GridOptions {
  std::vector<ModelKind> kinds = all_model_kinds();
  std::vector<double> ratios = default_weight_grid();
  std::vector<std::string> mask;
  uint64_t seed = 0;
  ModelSpec base_spec;
};

// Trains every kind under basic, SMOTE and each weight ratio; the cost-sensitive
// group keeps the best-AUC ratio per kind.
std::vector<ReportGroup> evaluate_grid(const FeatureTable& train, const FeatureTable& test,
                                       const GridOptions& options);

}  // namespace propagator

#endif  // PROPAGATOR_METRICS_H_
