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

#include "propagator/classify.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <mutex>
#include <thread>

namespace propagator {

using nlohmann::json;

namespace {

constexpr double kVarianceFloor = 1e-9;
constexpr double kMinGain = 1e-12;
constexpr char kVersion[] = "propagator 1.0";

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double gini(double a, double b) {
  const double t = a + b;
  if (t <= 0) return 0.0;
  const double pa = a / t, pb = b / t;
  return 1.0 - pa * pa - pb * pb;
}

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Each
// index writes only its own output slot.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNaiveBayes: return "naive_bayes";
    case ModelKind::kLogistic: return "logistic";
    case ModelKind::kRandomForest: return "random_forest";
    case ModelKind::kAdaBoostM1: return "adaboost_m1";
  }
  return "";
}

const char* model_display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNaiveBayes: return "Naive Bayes";
    case ModelKind::kLogistic: return "Logistic";
    case ModelKind::kRandomForest: return "Random Forest";
    case ModelKind::kAdaBoostM1: return "AdaBoostM1";
  }
  return "";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : all_model_kinds())
    if (name == model_kind_name(k)) return k;
  throw Error("UnknownModelKind", std::string(name));
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {ModelKind::kRandomForest, ModelKind::kNaiveBayes,
                                               ModelKind::kLogistic, ModelKind::kAdaBoostM1};
  return kinds;
}

json ModelSpec::to_json() const {
  return {{"kind", model_kind_name(kind)},
          {"trees", trees},
          {"max_depth", max_depth},
          {"features_per_split", features_per_split},
          {"min_leaf", min_leaf},
          {"learning_rate", learning_rate},
          {"epochs", epochs},
          {"l2", l2},
          {"rounds", rounds},
          {"base_kind", base_kind == BaseLearner::kTree ? "tree" : "random_forest"},
          {"base_depth", base_depth},
          {"base_trees", base_trees},
          {"imbalance", imbalance.to_string()},
          {"seed", seed}};
}

ModelSpec ModelSpec::from_json(const json& j) {
  ModelSpec s;
  s.kind = parse_model_kind(j.at("kind").get<std::string>());
  s.trees = j.at("trees").get<int>();
  s.max_depth = j.at("max_depth").get<int>();
  s.features_per_split = j.at("features_per_split").get<int>();
  s.min_leaf = j.at("min_leaf").get<int>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.epochs = j.at("epochs").get<int>();
  s.l2 = j.at("l2").get<double>();
  s.rounds = j.at("rounds").get<int>();
  const auto base = j.at("base_kind").get<std::string>();
  if (base == "tree") s.base_kind = BaseLearner::kTree;
  else if (base == "random_forest") s.base_kind = BaseLearner::kRandomForest;
  else throw Error("CorruptModel", "unknown base_kind " + base);
  s.base_depth = j.at("base_depth").get<int>();
  s.base_trees = j.at("base_trees").get<int>();
  s.imbalance = ImbalanceSetting::parse(j.at("imbalance").get<std::string>());
  s.seed = j.at("seed").get<uint64_t>();
  return s;
}

double DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  const auto& leaf = nodes[static_cast<std::size_t>(i)];
  const double total = leaf.counts[0] + leaf.counts[1];
  return total > 0 ? leaf.counts[1] / total : 0.5;
}

DecisionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                       const Eigen::VectorXd& sample_weight, const TreeOptions& options, Rng& rng) {
  const int d = static_cast<int>(x.cols());
  const int per_split =
      options.features_per_split <= 0 ? d : std::min(d, options.features_per_split);

  struct Pending {
    int node;
    std::vector<Eigen::Index> rows;
    int depth;
  };
  DecisionTree tree;
  std::vector<Eigen::Index> root_rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (sample_weight[i] > 0) root_rows.push_back(i);
  tree.nodes.emplace_back();
  std::vector<Pending> stack;
  stack.push_back({0, std::move(root_rows), 0});

  std::vector<int> features(static_cast<std::size_t>(d));
  std::vector<Eigen::Index> order;

  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    std::array<double, 2> counts{0.0, 0.0};
    for (auto r : p.rows) counts[static_cast<std::size_t>(y[r])] += sample_weight[r];
    tree.nodes[static_cast<std::size_t>(p.node)].counts = counts;
    const double total = counts[0] + counts[1];
    const bool depth_done = options.max_depth > 0 && p.depth >= options.max_depth;
    if (counts[0] <= 0 || counts[1] <= 0 || depth_done ||
        static_cast<int>(p.rows.size()) < 2 * options.min_leaf)
      continue;

    std::iota(features.begin(), features.end(), 0);
    for (int k = 0; k < per_split; ++k)
      std::swap(features[static_cast<std::size_t>(k)],
                features[static_cast<std::size_t>(k) + rng.below(static_cast<uint64_t>(d - k))]);
    std::vector<int> candidates(features.begin(), features.begin() + per_split);
    std::sort(candidates.begin(), candidates.end());

    const double parent = gini(counts[0], counts[1]);
    double best_gain = kMinGain;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int f : candidates) {
      order = p.rows;
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double va = x(a, f), vb = x(b, f);
        return va < vb || (va == vb && a < b);
      });
      double left[2] = {0.0, 0.0};
      const std::size_t n = order.size();
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto r = order[i];
        left[y[r]] += sample_weight[r];
        const double v = x(r, f), next = x(order[i + 1], f);
        if (v == next) continue;
        if (static_cast<int>(i + 1) < options.min_leaf || static_cast<int>(n - i - 1) < options.min_leaf)
          continue;
        const double wl = left[0] + left[1];
        const double wr = total - wl;
        const double child = (wl * gini(left[0], left[1]) +
                              wr * gini(counts[0] - left[0], counts[1] - left[1])) / total;
        const double gain = parent - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          double mid = v + (next - v) / 2.0;
          if (!(mid < next)) mid = v;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) continue;

    std::vector<Eigen::Index> left_rows, right_rows;
    for (auto r : p.rows)
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_id;
    node.right = right_id;
    stack.push_back({right_id, std::move(right_rows), p.depth + 1});
    stack.push_back({left_id, std::move(left_rows), p.depth + 1});
  }
  return tree;
}

Eigen::VectorXd bootstrap_counts(const Eigen::VectorXd& weights, Rng& rng) {
  const auto n = weights.size();
  std::vector<double> cumulative(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    total += weights[i];
    cumulative[static_cast<std::size_t>(i)] = total;
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  const auto draws = std::max<long long>(1, std::llround(total));
  for (long long k = 0; k < draws; ++k) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    counts[it - cumulative.begin()] += 1.0;
  }
  return counts;
}

LogisticObjective::LogisticObjective(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                     const Eigen::VectorXd& w, double l2)
    : x_(x), y_(y.cast<double>()), w_(w / w.sum()), l2_(l2) {}

double LogisticObjective::loss(const Eigen::VectorXd& theta) const {
  const auto d = x_.cols();
  const Eigen::VectorXd z = (x_ * theta.head(d)).array() + theta[d];
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += w_[i] * (softplus(z[i]) - y_[i] * z[i]);
  return total + 0.5 * l2_ * theta.head(d).squaredNorm();
}

Eigen::VectorXd LogisticObjective::gradient(const Eigen::VectorXd& theta) const {
  const auto d = x_.cols();
  const Eigen::VectorXd z = (x_ * theta.head(d)).array() + theta[d];
  const Eigen::VectorXd residual = w_.cwiseProduct(z.unaryExpr(&sigmoid) - y_);
  Eigen::VectorXd g(d + 1);
  g.head(d) = x_.transpose() * residual + l2_ * theta.head(d);
  g[d] = residual.sum();
  return g;
}

namespace {

NaiveBayesParams fit_naive_bayes(const FeatureTable& t) {
  const auto d = t.cols();
  NaiveBayesParams p;
  p.mean = Eigen::MatrixXd::Zero(2, d);
  p.variance = Eigen::MatrixXd::Zero(2, d);
  const double total = t.weights.sum();
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd wc = (t.y.array() == c).select(t.weights, 0.0);
    const double sw = wc.sum();
    p.log_prior[c] = std::log(sw / total);
    const Eigen::RowVectorXd mean = (wc.transpose() * t.x) / sw;
    const Eigen::MatrixXd centered = t.x.rowwise() - mean;
    const Eigen::RowVectorXd var =
        (wc.transpose() * centered.array().square().matrix()) / sw;
    p.mean.row(c) = mean;
    p.variance.row(c) = var.cwiseMax(kVarianceFloor);
  }
  return p;
}

double predict_naive_bayes(const NaiveBayesParams& p, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  double log_joint[2];
  for (int c = 0; c < 2; ++c) {
    const Eigen::ArrayXXd var = p.variance.row(c).array();
    const Eigen::ArrayXXd diff = x.array() - p.mean.row(c).array();
    log_joint[c] = p.log_prior[c] -
                   0.5 * ((2.0 * M_PI * var).log() + diff.square() / var).sum();
  }
  return sigmoid(log_joint[1] - log_joint[0]);
}

Standardization fit_standardization(const Eigen::MatrixXd& x) {
  Standardization s;
  s.mean = x.colwise().mean().transpose();
  s.scale = ((x.rowwise() - s.mean.transpose()).array().square().colwise().mean().sqrt())
                .matrix()
                .transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale[j] > 1e-12)) s.scale[j] = 1.0;
  return s;
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Standardization& s) {
  return (x.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array();
}

LogisticParams fit_logistic(const ModelSpec& spec, const Eigen::MatrixXd& z, const FeatureTable& t) {
  const auto d = z.cols();
  LogisticObjective objective(z, t.y, t.weights, spec.l2);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    theta -= spec.learning_rate * objective.gradient(theta);
    if (!theta.allFinite()) throw Error("NonFiniteLoss", "logistic regression diverged");
  }
  if (!std::isfinite(objective.loss(theta))) throw Error("NonFiniteLoss", "logistic regression diverged");
  return {theta.head(d), theta[d]};
}

std::vector<DecisionTree> fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                     const Eigen::VectorXd& weights, int trees, const TreeOptions& opts,
                                     uint64_t seed) {
  std::vector<DecisionTree> out(static_cast<std::size_t>(trees));
  parallel_for(trees, [&](int t) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
    const auto counts = bootstrap_counts(weights, rng);
    out[static_cast<std::size_t>(t)] = grow_tree(x, y, counts, opts, rng);
  });
  return out;
}

double forest_proba(const std::vector<DecisionTree>& trees, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return s / static_cast<double>(trees.size());
}

TreeOptions forest_options(const ModelSpec& spec, Eigen::Index d) {
  TreeOptions o;
  o.max_depth = spec.max_depth;
  o.min_leaf = spec.min_leaf;
  o.features_per_split = spec.features_per_split > 0
                             ? spec.features_per_split
                             : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
  return o;
}

AdaBoostParams fit_adaboost(const ModelSpec& spec, const FeatureTable& t) {
  const auto n = t.rows();
  Eigen::VectorXd dist = t.weights / t.weights.sum();
  AdaBoostParams params;
  for (int round = 0; round < spec.rounds; ++round) {
    const uint64_t round_seed = derive_seed(spec.seed, static_cast<uint64_t>(round));
    BoostStage stage;
    if (spec.base_kind == BaseLearner::kTree) {
      Rng rng(round_seed);
      TreeOptions o;
      o.max_depth = spec.base_depth;
      o.min_leaf = spec.min_leaf;
      stage.trees.push_back(grow_tree(t.x, t.y, dist, o, rng));
    } else {
      stage.trees = fit_forest(t.x, t.y, dist * static_cast<double>(n), spec.base_trees,
                               forest_options(spec, t.cols()), round_seed);
    }
    Eigen::VectorXi wrong(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int h = forest_proba(stage.trees, t.x.row(i)) >= 0.5 ? 1 : 0;
      wrong[i] = h != t.y[i];
    }
    const double err = wrong.cast<double>().dot(dist);
    if (err >= 0.5) {
      if (params.stages.empty()) {
        stage.alpha = 1.0;
        params.stages.push_back(std::move(stage));
      }
      break;
    }
    if (err <= 1e-12) {
      stage.alpha = 0.5 * std::log((1.0 - 1e-10) / 1e-10);
      params.stages.push_back(std::move(stage));
      break;
    }
    stage.alpha = 0.5 * std::log((1.0 - err) / err);
    for (Eigen::Index i = 0; i < n; ++i) dist[i] *= std::exp(wrong[i] ? stage.alpha : -stage.alpha);
    dist /= dist.sum();
    params.stages.push_back(std::move(stage));
  }
  return params;
}

double adaboost_proba(const AdaBoostParams& p, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  double margin = 0.0;
  for (const auto& s : p.stages) margin += s.alpha * (forest_proba(s.trees, x) >= 0.5 ? 1.0 : -1.0);
  return sigmoid(2.0 * margin);
}

std::string compute_id(const TrainedModel& m) {
  auto j = model_to_json(m);
  j.erase("id");
  return hex64(fnv1a64(j.dump()));
}

}  // namespace

TrainedModel train(const ModelSpec& spec, const FeatureTable& data, const std::vector<std::string>& mask) {
  if (data.x.rows() != data.y.size() || data.x.rows() != data.weights.size() ||
      data.x.cols() != static_cast<Eigen::Index>(data.feature_names.size()))
    throw Error("DimensionMismatch", "feature table shape is inconsistent");
  if (data.count(0) < 2 || data.count(1) < 2)
    throw Error("SingleClass", "training needs at least two instances of each class");
  if (spec.trees < 1 || spec.epochs < 1 || spec.rounds < 1 || spec.base_trees < 1 ||
      spec.base_depth < 1 || spec.min_leaf < 1 || !(spec.learning_rate > 0) || spec.l2 < 0)
    throw Error("InvalidSpec", "hyperparameters must be positive");

  TrainedModel model;
  model.spec = spec;
  model.manifest = data.feature_names;
  model.mask_index = mask.empty() ? [&] {
    std::vector<int> all(data.feature_names.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }() : mask_indices(data.feature_names, mask);
  for (int i : model.mask_index) model.mask.push_back(data.feature_names[static_cast<std::size_t>(i)]);
  model.metadata = {data.name, data.latest_request_time, kVersion};

  FeatureTable t = mask.empty() ? data : apply_mask(data, model.mask);
  t = apply_imbalance(t, spec.imbalance, derive_seed(spec.seed, "imbalance"));

  switch (spec.kind) {
    case ModelKind::kNaiveBayes:
      model.params = fit_naive_bayes(t);
      break;
    case ModelKind::kLogistic: {
      model.standardization = fit_standardization(t.x);
      model.params = fit_logistic(spec, standardize(t.x, *model.standardization), t);
      break;
    }
    case ModelKind::kRandomForest:
      model.params = ForestParams{fit_forest(t.x, t.y, t.weights, spec.trees,
                                             forest_options(spec, t.cols()), spec.seed)};
      break;
    case ModelKind::kAdaBoostM1:
      model.params = fit_adaboost(spec, t);
      break;
  }
  model.id = compute_id(model);
  return model;
}

double predict_proba_masked(const TrainedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != static_cast<Eigen::Index>(model.mask_index.size()))
    throw Error("DimensionMismatch", "expected " + std::to_string(model.mask_index.size()) + " features");
  const double p = std::visit(
      [&](const auto& params) -> double {
        using P = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          return predict_naive_bayes(params, x);
        } else if constexpr (std::is_same_v<P, LogisticParams>) {
          const auto& s = *model.standardization;
          const Eigen::RowVectorXd z = (x - s.mean.transpose()).array() / s.scale.transpose().array();
          return sigmoid(z.dot(params.weights) + params.bias);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          return forest_proba(params.trees, x);
        } else {
          return adaboost_proba(params, x);
        }
      },
      model.params);
  if (std::isnan(p)) return 0.5;
  return std::clamp(p, 0.0, 1.0);
}

double predict_proba(const TrainedModel& model, const FeatureVector& fv) {
  if (!fv.manifest || fv.manifest->names != model.manifest)
    throw Error("DimensionMismatch", "feature vector does not follow the model manifest");
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(model.mask_index.size()));
  for (std::size_t k = 0; k < model.mask_index.size(); ++k)
    x[static_cast<Eigen::Index>(k)] = fv.values[model.mask_index[k]];
  return predict_proba_masked(model, x);
}

Eigen::VectorXd predict_proba(const TrainedModel& model, const FeatureTable& table) {
  if (table.feature_names != model.manifest)
    throw Error("DimensionMismatch", "feature table does not follow the model manifest");
  Eigen::VectorXd out(table.rows());
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(model.mask_index.size()));
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (std::size_t k = 0; k < model.mask_index.size(); ++k)
      x[static_cast<Eigen::Index>(k)] = table.x(i, model.mask_index[k]);
    out[i] = predict_proba_masked(model, x);
  }
  return out;
}

Label classify(const TrainedModel& model, const FeatureVector& fv, double threshold) {
  return predict_proba(model, fv) >= threshold ? Label::kRetweeter : Label::kNonRetweeter;
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json tree_json(const DecisionTree& t, int i) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  if (n.is_leaf()) return {{"leaf", {{"counts", {n.counts[0], n.counts[1]}}}}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"counts", {n.counts[0], n.counts[1]}},
          {"left", tree_json(t, n.left)},
          {"right", tree_json(t, n.right)}};
}

int tree_from(const json& j, DecisionTree& t) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    const auto c = j.at("leaf").at("counts").get<std::vector<double>>();
    if (c.size() != 2) throw Error("CorruptModel", "leaf counts must have two entries");
    t.nodes[static_cast<std::size_t>(id)].counts = {c[0], c[1]};
    return id;
  }
  DecisionTree::Node node;
  node.feature = j.at("feature").get<int>();
  node.threshold = j.at("threshold").get<double>();
  const auto c = j.at("counts").get<std::vector<double>>();
  if (c.size() != 2) throw Error("CorruptModel", "node counts must have two entries");
  node.counts = {c[0], c[1]};
  node.left = tree_from(j.at("left"), t);
  node.right = tree_from(j.at("right"), t);
  t.nodes[static_cast<std::size_t>(id)] = node;
  return id;
}

json trees_json(const std::vector<DecisionTree>& trees) {
  json a = json::array();
  for (const auto& t : trees) a.push_back(tree_json(t, 0));
  return a;
}

std::vector<DecisionTree> trees_from(const json& j, std::size_t dims) {
  std::vector<DecisionTree> out;
  for (const auto& tj : j) {
    DecisionTree t;
    tree_from(tj, t);
    for (const auto& n : t.nodes)
      if (!n.is_leaf() && (n.feature < 0 || static_cast<std::size_t>(n.feature) >= dims))
        throw Error("CorruptModel", "tree feature index out of range");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

json model_to_json(const TrainedModel& m) {
  json params = std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          return {{"log_prior", {p.log_prior[0], p.log_prior[1]}},
                  {"mean", {vec_json(p.mean.row(0).transpose()), vec_json(p.mean.row(1).transpose())}},
                  {"variance",
                   {vec_json(p.variance.row(0).transpose()), vec_json(p.variance.row(1).transpose())}}};
        } else if constexpr (std::is_same_v<P, LogisticParams>) {
          return {{"weights", vec_json(p.weights)}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          return {{"trees", trees_json(p.trees)}};
        } else {
          json stages = json::array();
          for (const auto& s : p.stages) stages.push_back({{"alpha", s.alpha}, {"trees", trees_json(s.trees)}});
          return {{"stages", stages}};
        }
      },
      m.params);
  json j = {{"format_version", kModelFormatVersion},
            {"id", m.id},
            {"spec", m.spec.to_json()},
            {"manifest", m.manifest},
            {"mask", m.mask},
            {"params", params},
            {"metadata",
             {{"dataset", m.metadata.dataset},
              {"trained_at", m.metadata.trained_at},
              {"version", m.metadata.version}}}};
  if (m.standardization)
    j["standardization"] = {{"mean", vec_json(m.standardization->mean)},
                            {"std", vec_json(m.standardization->scale)}};
  return j;
}

TrainedModel model_from_json(const json& j) {
  if (!j.is_object()) throw Error("CorruptModel", "model must be a JSON object");
  if (j.contains("format_version") && j["format_version"].is_number_integer() &&
      j["format_version"].get<int>() > kModelFormatVersion)
    throw Error("VersionMismatch", "model format " + j["format_version"].dump() +
                                       " is newer than supported " + std::to_string(kModelFormatVersion));
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw Error("VersionMismatch", "unsupported model format " + j["format_version"].dump());
    TrainedModel m;
    m.spec = ModelSpec::from_json(j.at("spec"));
    m.manifest = j.at("manifest").get<std::vector<std::string>>();
    m.mask = j.at("mask").get<std::vector<std::string>>();
    m.mask_index = mask_indices(m.manifest, m.mask);
    const auto d = m.mask_index.size();
    const auto& meta = j.at("metadata");
    m.metadata = {meta.at("dataset").get<std::string>(), meta.at("trained_at").get<Timestamp>(),
                  meta.at("version").get<std::string>()};
    const auto& p = j.at("params");
    switch (m.spec.kind) {
      case ModelKind::kNaiveBayes: {
        NaiveBayesParams nb;
        const auto prior = p.at("log_prior").get<std::vector<double>>();
        if (prior.size() != 2) throw Error("CorruptModel", "log_prior must have two entries");
        nb.log_prior = {prior[0], prior[1]};
        nb.mean.resize(2, static_cast<Eigen::Index>(d));
        nb.variance.resize(2, static_cast<Eigen::Index>(d));
        for (int c = 0; c < 2; ++c) {
          const auto mu = vec_from(p.at("mean").at(static_cast<std::size_t>(c)));
          const auto var = vec_from(p.at("variance").at(static_cast<std::size_t>(c)));
          if (static_cast<std::size_t>(mu.size()) != d || static_cast<std::size_t>(var.size()) != d)
            throw Error("CorruptModel", "naive bayes dimensionality does not match mask");
          nb.mean.row(c) = mu.transpose();
          nb.variance.row(c) = var.transpose();
        }
        if (!nb.mean.allFinite() || !nb.variance.allFinite() || (nb.variance.array() <= 0).any())
          throw Error("CorruptModel", "invalid naive bayes parameters");
        m.params = std::move(nb);
        break;
      }
      case ModelKind::kLogistic: {
        LogisticParams lp{vec_from(p.at("weights")), p.at("bias").get<double>()};
        const auto& s = j.at("standardization");
        m.standardization = Standardization{vec_from(s.at("mean")), vec_from(s.at("std"))};
        if (static_cast<std::size_t>(lp.weights.size()) != d ||
            static_cast<std::size_t>(m.standardization->mean.size()) != d ||
            static_cast<std::size_t>(m.standardization->scale.size()) != d)
          throw Error("CorruptModel", "logistic dimensionality does not match mask");
        if (!lp.weights.allFinite() || !std::isfinite(lp.bias))
          throw Error("CorruptModel", "non-finite logistic parameters");
        m.params = std::move(lp);
        break;
      }
      case ModelKind::kRandomForest:
        m.params = ForestParams{trees_from(p.at("trees"), d)};
        break;
      case ModelKind::kAdaBoostM1: {
        AdaBoostParams ab;
        for (const auto& s : p.at("stages"))
          ab.stages.push_back({s.at("alpha").get<double>(), trees_from(s.at("trees"), d)});
        m.params = std::move(ab);
        break;
      }
    }
    m.id = j.at("id").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw Error("CorruptModel", e.what());
  }
}

std::string serialize_model(const TrainedModel& model) { return model_to_json(model).dump(); }

TrainedModel parse_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("CorruptModel", e.what());
  }
  return model_from_json(j);
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace propagator
