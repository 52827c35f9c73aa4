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

#ifndef PROPAGATOR_CLASSIFY_H_
#define PROPAGATOR_CLASSIFY_H_

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "propagator/features.h"
#include "propagator/preprocess.h"
#include "propagator/util.h"

namespace propagator {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind { kNaiveBayes, kLogistic, kRandomForest, kAdaBoostM1 };
enum class BaseLearner { kTree, kRandomForest };

const char* model_kind_name(ModelKind kind);     // "random_forest"
const char* model_display_name(ModelKind kind);  // "Random Forest"
ModelKind parse_model_kind(std::string_view name);
const std::vector<ModelKind>& all_model_kinds();

struct ModelSpec {
  ModelKind kind = ModelKind::kRandomForest;
  // random forest
  int trees = 100;
  int max_depth = 0;           // 0 = grow to purity
  int features_per_split = 0;  // 0 = floor(sqrt(d))
  int min_leaf = 1;
  // logistic regression
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
  // AdaBoost.M1
  int rounds = 50;
  BaseLearner base_kind = BaseLearner::kTree;
  int base_depth = 3;
  int base_trees = 10;

  ImbalanceSetting imbalance;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<double, 2> counts{0.0, 0.0};  // class weight reaching the node

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  // Retweeter frequency at the reached leaf; x[feature] <= threshold goes left.
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  bool operator==(const DecisionTree&) const = default;
};

struct TreeOptions {
  int max_depth = 0;
  int features_per_split = 0;  // 0 = all features
  int min_leaf = 1;
};

// Weighted Gini tree. sample_weight[i] == 0 excludes row i. Splits are
// chosen by best gain; ties keep the lowest feature index, then the lowest
// threshold.
DecisionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                       const Eigen::VectorXd& sample_weight, const TreeOptions& options, Rng& rng);

// Multiplicities of a weighted bootstrap: round(sum w) draws, each row drawn
// with probability proportional to its weight.
Eigen::VectorXd bootstrap_counts(const Eigen::VectorXd& weights, Rng& rng);

struct NaiveBayesParams {
  Eigen::Vector2d log_prior;
  Eigen::MatrixXd mean;      // 2 x d
  Eigen::MatrixXd variance;  // 2 x d
};

struct LogisticParams {
  Eigen::VectorXd weights;  // on standardized features
  double bias = 0.0;
};

struct ForestParams {
  std::vector<DecisionTree> trees;
};

struct BoostStage {
  double alpha = 0.0;
  std::vector<DecisionTree> trees;  // one tree, or a forest for forest base learners
};

struct AdaBoostParams {
  std::vector<BoostStage> stages;
};

using ModelParams = std::variant<NaiveBayesParams, LogisticParams, ForestParams, AdaBoostParams>;

struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

struct TrainingMetadata {
  std::string dataset;
  Timestamp trained_at = 0;  // latest request time in the training data
  std::string version;
};

struct TrainedModel {
  ModelSpec spec;
  std::vector<std::string> manifest;  // full feature order the model reads
  std::vector<std::string> mask;      // subset used, in manifest order
  std::vector<int> mask_index;
  std::optional<Standardization> standardization;
  ModelParams params;
  TrainingMetadata metadata;
  std::string id;
};

// Weighted, L2-regularized mean log-loss on already standardized inputs.
// theta = [weights; bias].
class LogisticObjective {
 public:
  LogisticObjective(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const Eigen::VectorXd& w,
                    double l2);

  double loss(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;

 private:
  const Eigen::MatrixXd& x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd w_;
  double l2_;
};

// Applies spec.imbalance, then fits. `mask` empty = all columns.
// Throws SingleClass, DimensionMismatch, NonFiniteLoss.
TrainedModel train(const ModelSpec& spec, const FeatureTable& data,
                   const std::vector<std::string>& mask = {});

// Probability of the retweeter class for a row over the masked features.
double predict_proba_masked(const TrainedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);
double predict_proba(const TrainedModel& model, const FeatureVector& fv);
// Table columns must equal the model manifest.
Eigen::VectorXd predict_proba(const TrainedModel& model, const FeatureTable& table);

Label classify(const TrainedModel& model, const FeatureVector& fv, double threshold = 0.5);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
std::string serialize_model(const TrainedModel& model);
TrainedModel parse_model(std::string_view text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace propagator

#endif  // PROPAGATOR_CLASSIFY_H_
