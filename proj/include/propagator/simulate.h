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

#ifndef PROPAGATOR_SIMULATE_H_
#define PROPAGATOR_SIMULATE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "propagator/classify.h"
#include "propagator/corpus.h"
#include "propagator/features.h"
#include "propagator/recommend.h"

namespace propagator {

// One activity regime of the hourly posting mixture.
struct ActivityRegime {
  double weight = 1.0;
  double hour_concentration = 0.0;  // von Mises style peak sharpness over 24 h
  double day_concentration = 0.0;   // same over the 7 weekdays
  double burstiness = 0.0;          // chance a post follows the previous one within minutes
};

// Coefficients on population z-scores of observable features.
struct WillingnessModel {
  double activity = 1.0;           // log1p(statuses per day, last 30 days)
  double retweet_rate = 1.2;       // retweets per status
  double stranger_fraction = 0.8;  // stranger retweet fraction
  double hour_entropy = -0.6;      // hour-of-day entropy
  double followers = 0.0;          // log1p(followers)
  double noise_sd = 0.5;
};

struct PopulationConfig {
  int n_users = 2000;
  double base_positive_rate = 0.05;
  uint64_t seed = 1;
  Timestamp request_time = 1341100800;  // 2012-07-01T00:00:00Z

  double log_rate_mean = 0.0;  // log statuses per day
  double log_rate_sd = 1.0;
  double min_longevity_days = 60;
  double max_longevity_days = 1500;
  std::vector<ActivityRegime> regimes = {{0.4, 2.5, 1.0, 0.05}, {0.35, 0.5, 0.2, 0.0}, {0.25, 1.2, 0.5, 0.5}};

  WillingnessModel willingness;

  double wait_median_hours = 12.0;  // log-normal over per-user mean waits
  double wait_log_sd = 1.5;

  double followers_log_mean = 4.0;  // log-normal follower counts
  double followers_log_sd = 1.4;
  int64_t max_followers = 5000;
  double follower_overlap = 0.3;  // share of the follower pool that is shared
  double friends_log_mean = 4.5;
  double friends_log_sd = 1.0;

  void validate() const;  // throws InvalidConfig
  nlohmann::json to_json() const;
  static PopulationConfig from_json(const nlohmann::json& j);
};

PopulationConfig load_population_config(const std::filesystem::path& path);

struct SyntheticUser {
  UserRecord record;
  double latent_willingness = 0.0;
  double latent_mean_wait = 0.0;  // seconds
};

std::vector<SyntheticUser> generate_population(const PopulationConfig& config);

struct OracleResponse {
  bool retweeted = false;
  std::optional<double> wait;  // seconds after dispatch
};

// Bernoulli(willingness) response with Exponential(latent mean) wait;
// deterministic in (user, dispatch_time, seed).
OracleResponse behavior_oracle(const SyntheticUser& user, Timestamp dispatch_time, uint64_t seed);

// Labels every user by probing the oracle at request_time.
LabeledDataset label_population(const std::vector<SyntheticUser>& users, Timestamp request_time,
                                uint64_t seed, std::string name = "synthetic");

struct StrategySpec {
  enum class Kind { kRandom, kPopular, kPredicted, kPredictedWaitTime };
  Kind kind = Kind::kRandom;
  int64_t popular_threshold = 100;
  double deadline = kDefaultDeadline;  // seconds, wait-time strategy only
  double cutoff = kDefaultCutoff;

  std::string label() const;  // table row label
  std::string to_string() const;
  // random | popular[:T] | predicted | predicted_waittime[:<deadline>[:<cutoff>]]
  static StrategySpec parse(std::string_view text);
};

std::vector<StrategySpec> parse_strategies(std::string_view comma_separated);

// Candidate pool for one request: model scores and wait-time estimates
// aligned with `users`.
struct ScoredPopulation {
  const std::vector<SyntheticUser>* users = nullptr;
  std::vector<ScoredCandidate> candidates;
};

ScoredPopulation score_population(const std::vector<SyntheticUser>& users, const TrainedModel& model,
                                  const FeatureExtractor& extractor, Timestamp request_time);

struct StrategyResult {
  StrategySpec strategy;
  std::vector<ContactOutcome> outcomes;
  double window = kDefaultDeadline;
  std::size_t contacted = 0;
  std::optional<double> rate;
  std::optional<double> windowed_rate;
  std::optional<InfoReach> reach;
};

struct RunOptions {
  std::size_t budget = 100;
  Timestamp request_time = 0;
  uint64_t oracle_seed = 0;
  uint64_t selection_seed = 0;
  double window = kDefaultDeadline;  // for the windowed rate column
};

// Throws BudgetExceedsPopulation. Predicted strategies need `scored`.
StrategyResult run_strategy(const std::vector<SyntheticUser>& users, const StrategySpec& strategy,
                            const RunOptions& options, const ScoredPopulation* scored = nullptr);

struct ComparisonTable {
  std::string window_label;
  std::vector<StrategyResult> rows;

  std::string text() const;
  std::string csv() const;
};

// Throws InvalidArgument for fewer than two strategies.
ComparisonTable experiment_report(std::vector<StrategyResult> results);

std::string format_percent(double ratio);  // 0.133 -> "13.3%"

struct ExperimentOptions {
  std::vector<StrategySpec> strategies;
  std::size_t budget = 100;
  double window = kDefaultDeadline;
  double train_fraction = 2.0 / 3.0;
  ModelSpec model_spec;  // defaults to random forest, weighted:30
  uint64_t seed = 0;

  ExperimentOptions();
};

struct ExperimentResult {
  ComparisonTable table;
  double test_auc = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

// Generate, label, split, train on the training users, then run every
// strategy over the held-out users.
ExperimentResult run_experiment(const PopulationConfig& config, const ExperimentOptions& options,
                                const Lexicon& lexicon, const TraitMapping& mapping);

}  // namespace propagator

#endif  // PROPAGATOR_SIMULATE_H_
