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

#include "propagator/preprocess.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "propagator/util.h"

namespace propagator {

std::vector<int> equal_frequency_bins(const Eigen::Ref<const Eigen::VectorXd>& values, int bins) {
  if (bins < 2) throw Error("InvalidBins", "bins must be >= 2");
  const auto n = static_cast<std::size_t>(values.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[static_cast<Eigen::Index>(a)] < values[static_cast<Eigen::Index>(b)];
  });
  std::vector<int> out(n, 0);
  std::size_t rank = 0;
  while (rank < n) {
    std::size_t end = rank;
    const double v = values[static_cast<Eigen::Index>(order[rank])];
    while (end < n && values[static_cast<Eigen::Index>(order[end])] == v) ++end;
    const int bin = std::min<int>(bins - 1, static_cast<int>(rank * static_cast<std::size_t>(bins) / n));
    for (std::size_t r = rank; r < end; ++r) out[order[r]] = bin;
    rank = end;
  }
  return out;
}

ContingencyResult chi_squared_statistic(const std::vector<std::array<double, 2>>& table) {
  double col[2] = {0, 0};
  double total = 0;
  int rows = 0;
  for (const auto& r : table) {
    col[0] += r[0];
    col[1] += r[1];
    if (r[0] + r[1] > 0) ++rows;
  }
  total = col[0] + col[1];
  const int cols = (col[0] > 0) + (col[1] > 0);
  ContingencyResult res;
  if (rows < 2 || cols < 2) return res;
  for (const auto& r : table) {
    const double row_total = r[0] + r[1];
    if (row_total <= 0) continue;
    for (int c = 0; c < 2; ++c) {
      const double expected = row_total * col[c] / total;
      const double diff = r[static_cast<std::size_t>(c)] - expected;
      res.chi2 += diff * diff / expected;
    }
  }
  res.dof = (rows - 1) * (cols - 1);
  return res;
}

std::vector<FeatureScore> chi_squared_scores(const FeatureTable& train, int bins) {
  if (bins < 2) throw Error("InvalidBins", "bins must be >= 2");
  if (train.count(0) == 0 || train.count(1) == 0)
    throw Error("SingleClass", "chi-squared scoring needs both classes");
  std::vector<FeatureScore> scores(static_cast<std::size_t>(train.cols()));
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    const auto assignment = equal_frequency_bins(train.x.col(j), bins);
    std::vector<std::array<double, 2>> table(static_cast<std::size_t>(bins), {0.0, 0.0});
    for (Eigen::Index i = 0; i < train.rows(); ++i)
      table[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])]
           [static_cast<std::size_t>(train.y[i])] += 1.0;
    const auto stat = chi_squared_statistic(table);
    auto& s = scores[static_cast<std::size_t>(j)];
    s.feature = train.feature_names[static_cast<std::size_t>(j)];
    s.chi2 = stat.chi2;
    s.p_value = 1.0;
    if (stat.dof > 0 && stat.chi2 > 0) {
      boost::math::chi_squared dist(stat.dof);
      s.p_value = boost::math::cdf(boost::math::complement(dist, stat.chi2));
    }
    s.selected = s.p_value < kSelectionPValue;
  }
  std::sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
    if (a.chi2 != b.chi2) return a.chi2 > b.chi2;
    return a.feature < b.feature;
  });
  return scores;
}

std::vector<std::string> selected_features(const std::vector<FeatureScore>& scores) {
  std::vector<std::string> out;
  for (const auto& s : scores)
    if (s.selected) out.push_back(s.feature);
  return out;
}

std::string feature_scores_csv(const std::vector<FeatureScore>& scores) {
  std::ostringstream out;
  out << "feature,chi2,p_value,selected\n";
  for (const auto& s : scores) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6g", s.chi2, s.p_value);
    out << s.feature << ',' << buf << ',' << (s.selected ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<std::string> parse_feature_list(std::string_view text) {
  // Accepts a feature-score CSV (selected rows) or one name per line.
  std::vector<std::string> out;
  bool csv = false;
  for (const auto& raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "feature,chi2,p_value,selected") {
      csv = true;
      continue;
    }
    if (csv) {
      auto cells = split(line, ',');
      if (cells.size() != 4) throw Error("MalformedFeatureList", std::string(line));
      if (trim(cells[3]) == "1") out.emplace_back(trim(cells[0]));
    } else {
      out.emplace_back(line);
    }
  }
  return out;
}

std::vector<int> mask_indices(const std::vector<std::string>& manifest,
                              const std::vector<std::string>& selected) {
  if (selected.empty()) throw Error("EmptyMask", "no features selected");
  std::vector<int> idx;
  for (const auto& name : selected) {
    auto it = std::find(manifest.begin(), manifest.end(), name);
    if (it == manifest.end()) throw Error("UnknownFeature", name);
    idx.push_back(static_cast<int>(it - manifest.begin()));
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

FeatureTable apply_mask(const FeatureTable& table, const std::vector<std::string>& selected) {
  const auto idx = mask_indices(table.feature_names, selected);
  FeatureTable out = table;
  out.feature_names.clear();
  out.x.resize(table.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.x.col(static_cast<Eigen::Index>(k)) = table.x.col(idx[k]);
    out.feature_names.push_back(table.feature_names[static_cast<std::size_t>(idx[k])]);
  }
  return out;
}

int minority_label(const FeatureTable& table) {
  return table.count(1) <= table.count(0) ? 1 : 0;
}

FeatureTable smote(const FeatureTable& train, int k, uint64_t seed) {
  if (k < 1) throw Error("InvalidArgument", "SMOTE k must be >= 1");
  const int minority = minority_label(train);
  std::vector<Eigen::Index> members;
  for (Eigen::Index i = 0; i < train.rows(); ++i)
    if (train.y[i] == minority) members.push_back(i);
  const auto m = static_cast<Eigen::Index>(members.size());
  if (m < 2) throw Error("TooFewMinority", "SMOTE needs at least two minority instances");
  const Eigen::Index needed = train.count(1 - minority) - m;
  if (needed <= 0) return train;
  k = static_cast<int>(std::min<Eigen::Index>(k, m - 1));

  Eigen::MatrixXd pts(m, train.cols());
  for (Eigen::Index r = 0; r < m; ++r) pts.row(r) = train.x.row(members[static_cast<std::size_t>(r)]);
  const Eigen::RowVectorXd lo = pts.colwise().minCoeff();
  const Eigen::RowVectorXd range = pts.colwise().maxCoeff() - lo;
  const Eigen::RowVectorXd inv =
      range.unaryExpr([](double r) { return r > 0 ? 1.0 / r : 0.0; });
  const Eigen::MatrixXd scaled = (pts.rowwise() - lo).array().rowwise() * inv.array();

  std::vector<std::vector<Eigen::Index>> neighbours(static_cast<std::size_t>(m));
  for (Eigen::Index a = 0; a < m; ++a) {
    std::vector<std::pair<double, Eigen::Index>> d;
    d.reserve(static_cast<std::size_t>(m - 1));
    for (Eigen::Index b = 0; b < m; ++b)
      if (b != a) d.emplace_back((scaled.row(a) - scaled.row(b)).squaredNorm(), b);
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    for (int j = 0; j < k; ++j) neighbours[static_cast<std::size_t>(a)].push_back(d[static_cast<std::size_t>(j)].second);
  }

  FeatureTable out = train;
  const Eigen::Index n0 = train.rows();
  out.x.conservativeResize(n0 + needed, Eigen::NoChange);
  out.y.conservativeResize(n0 + needed);
  out.weights.conservativeResize(n0 + needed);
  Rng rng(seed);
  for (Eigen::Index g = 0; g < needed; ++g) {
    const Eigen::Index a = g % m;
    const auto& nn = neighbours[static_cast<std::size_t>(a)];
    const Eigen::Index b = nn[rng.below(nn.size())];
    const double u = rng.uniform();
    const Eigen::RowVectorXd xa = pts.row(a), xb = pts.row(b);
    Eigen::RowVectorXd synth = xa + u * (xb - xa);
    synth = synth.cwiseMax(xa.cwiseMin(xb)).cwiseMin(xa.cwiseMax(xb));
    out.x.row(n0 + g) = synth;
    out.y[n0 + g] = minority;
    out.weights[n0 + g] = 1.0;
    out.ids.push_back("smote_" + std::to_string(g) + "_" + train.ids[static_cast<std::size_t>(members[static_cast<std::size_t>(a)])]);
  }
  return out;
}

FeatureTable class_weights(const FeatureTable& train, double ratio) {
  if (!(ratio >= 1.0)) throw Error("InvalidRatio", "minority weight ratio must be >= 1");
  const int minority = minority_label(train);
  FeatureTable out = train;
  out.weights = (train.y.array() == minority).select(Eigen::VectorXd::Constant(train.rows(), ratio),
                                                     Eigen::VectorXd::Ones(train.rows()));
  return out;
}

std::string ImbalanceSetting::to_string() const {
  switch (kind) {
    case Kind::kBasic: return "basic";
    case Kind::kSmote: return "smote";
    case Kind::kWeighted: {
      std::ostringstream s;
      s << "weighted:" << ratio;
      return s.str();
    }
  }
  return "basic";
}

ImbalanceSetting ImbalanceSetting::parse(std::string_view text) {
  text = trim(text);
  if (text == "basic") return {Kind::kBasic, 1.0};
  if (text == "smote") return {Kind::kSmote, 1.0};
  if (text.starts_with("weighted:")) {
    auto parts = split(text.substr(9), ':');
    if (parts.size() == 2 && trim(parts[1]) != "1") parts.clear();
    if (parts.size() == 1 || parts.size() == 2) {
      try {
        std::size_t used = 0;
        const double r = std::stod(parts[0], &used);
        if (used == parts[0].size() && r >= 1.0) return {Kind::kWeighted, r};
      } catch (const std::exception&) {
      }
    }
  }
  throw Error("InvalidImbalance", "expected basic, smote or weighted:R, got '" + std::string(text) + "'");
}

FeatureTable apply_imbalance(const FeatureTable& train, const ImbalanceSetting& setting,
                             uint64_t seed, int smote_k) {
  switch (setting.kind) {
    case ImbalanceSetting::Kind::kBasic: return train;
    case ImbalanceSetting::Kind::kSmote: return smote(train, smote_k, seed);
    case ImbalanceSetting::Kind::kWeighted: return class_weights(train, setting.ratio);
  }
  return train;
}

}  // namespace propagator
