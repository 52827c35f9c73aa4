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

#include "propagator/metrics.h"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "propagator/util.h"

namespace propagator {

double auc(const std::vector<ScoredLabel>& scores) {
  int64_t pos = 0, neg = 0;
  for (const auto& s : scores) (s.label == 1 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw Error("SingleClass", "AUC needs both classes");
  std::vector<ScoredLabel> sorted = scores;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  // Count in half-credits so the result is a single exact division.
  int64_t half_credits = 0;
  int64_t neg_below = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    int64_t p = 0, n = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label == 1 ? p : n) += 1;
      ++j;
    }
    half_credits += p * (2 * neg_below + n);
    neg_below += n;
    i = j;
  }
  return static_cast<double>(half_credits) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw Error("DimensionMismatch", "predictions vs labels");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1, l = labels[i] == 1;
    if (p && l) ++c.tp;
    else if (p) ++c.fp;
    else if (l) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

double class_f1(int64_t tp, int64_t fp, int64_t fn) {
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1(const Confusion& c, F1Mode mode) {
  const double positive = class_f1(c.tp, c.fp, c.fn);
  if (mode == F1Mode::kRetweeter) return positive;
  const double negative = class_f1(c.tn, c.fn, c.fp);
  const double n = static_cast<double>(c.total());
  if (n == 0) return 0.0;
  return (static_cast<double>(c.tp + c.fn) * positive + static_cast<double>(c.tn + c.fp) * negative) / n;
}

double f1(const std::vector<int>& predictions, const std::vector<int>& labels, F1Mode mode) {
  if (labels.empty()) throw Error("EmptyInput", "F1 needs at least one instance");
  return f1(confusion(predictions, labels), mode);
}

std::string EvalReport::row() const {
  return std::string(model_display_name(kind)) + " " + format_fixed(auc, 3) + " " +
         format_fixed(f1_overall, 3) + " " + format_fixed(f1_retweeter, 3);
}

std::string setting_label(const ImbalanceSetting& s) {
  switch (s.kind) {
    case ImbalanceSetting::Kind::kBasic: return "basic";
    case ImbalanceSetting::Kind::kSmote: return "smote";
    case ImbalanceSetting::Kind::kWeighted: {
      std::ostringstream o;
      o << "cost_sensitive(" << s.ratio << ")";
      return o.str();
    }
  }
  return "basic";
}

EvalReport evaluate(const TrainedModel& model, const FeatureTable& test, double threshold) {
  if (test.rows() == 0) throw Error("EmptyInput", "empty test set");
  const Eigen::VectorXd proba = predict_proba(model, test);
  std::vector<ScoredLabel> scored;
  std::vector<int> predictions, labels;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    scored.push_back({proba[i], test.y[i]});
    predictions.push_back(proba[i] >= threshold ? 1 : 0);
    labels.push_back(test.y[i]);
  }
  EvalReport r;
  r.model_id = model.id;
  r.kind = model.spec.kind;
  r.setting = setting_label(model.spec.imbalance);
  r.auc = auc(scored);
  r.counts = confusion(predictions, labels);
  r.f1_overall = f1(r.counts, F1Mode::kOverallWeighted);
  r.f1_retweeter = f1(r.counts, F1Mode::kRetweeter);
  r.n_test = test.rows();
  return r;
}

std::string render_report_table(const std::vector<ReportGroup>& groups, bool include_svm_placeholder) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "Classifier" << std::right << std::setw(8) << "AUC"
      << std::setw(8) << "F1" << std::setw(18) << "F1 of Retweeter" << '\n';
  for (const auto& g : groups) {
    out << g.title << '\n';
    for (const auto& r : g.rows) {
      out << std::left << std::setw(16) << model_display_name(r.kind) << std::right << std::setw(8)
          << format_fixed(r.auc, 3) << std::setw(8) << format_fixed(r.f1_overall, 3) << std::setw(18)
          << format_fixed(r.f1_retweeter, 3) << '\n';
    }
    if (include_svm_placeholder)
      out << std::left << std::setw(16) << "SMO" << std::right << std::setw(34) << "not implemented"
          << '\n';
  }
  return out.str();
}

std::string render_report_csv(const std::vector<ReportGroup>& groups) {
  std::ostringstream out;
  out << "setting,classifier,model_id,auc,f1,f1_retweeter,tp,fp,tn,fn,n_test\n";
  for (const auto& g : groups)
    for (const auto& r : g.rows)
      out << r.setting << ',' << model_kind_name(r.kind) << ',' << r.model_id << ','
          << format_fixed(r.auc, 3) << ',' << format_fixed(r.f1_overall, 3) << ','
          << format_fixed(r.f1_retweeter, 3) << ',' << r.counts.tp << ',' << r.counts.fp << ','
          << r.counts.tn << ',' << r.counts.fn << ',' << r.n_test << '\n';
  return out.str();
}

std::vector<ReportGroup> evaluate_grid(const FeatureTable& train, const FeatureTable& test,
                                       const GridOptions& options) {
  auto run = [&](ModelKind kind, const ImbalanceSetting& setting) {
    ModelSpec spec = options.base_spec;
    spec.kind = kind;
    spec.imbalance = setting;
    spec.seed = options.seed;
    return evaluate(propagator::train(spec, train, options.mask), test);
  };
  std::vector<ReportGroup> groups = {{"Basic", {}}, {"SMOTE", {}}, {"Cost-Sensitive", {}}};
  for (auto kind : options.kinds) {
    groups[0].rows.push_back(run(kind, {ImbalanceSetting::Kind::kBasic, 1.0}));
    groups[1].rows.push_back(run(kind, {ImbalanceSetting::Kind::kSmote, 1.0}));
    std::optional<EvalReport> best;
    for (double ratio : options.ratios) {
      auto r = run(kind, {ImbalanceSetting::Kind::kWeighted, ratio});
      if (!best || r.auc > best->auc) best = std::move(r);
    }
    if (best) groups[2].rows.push_back(std::move(*best));
  }
  if (options.ratios.empty()) groups.pop_back();
  return groups;
}

}  // namespace propagator
