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

#ifndef PROPAGATOR_WAITTIME_H_
#define PROPAGATOR_WAITTIME_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "propagator/corpus.h"

namespace propagator {

inline constexpr double kDefaultFallbackWait = 12.0 * 3600.0;  // seconds

enum class WaitSource { kHistory, kPopulationFallback };

// Exponential wait-time model: retweets arrive at rate 1 / mean_wait.
struct WaitTimeModel {
  std::string user_id;
  double mean_wait = kDefaultFallbackWait;  // seconds
  int sample_count = 0;
  WaitSource source = WaitSource::kPopulationFallback;

  bool operator==(const WaitTimeModel&) const = default;
};

// Samples are retweet time minus original post time; non-positive samples
// are dropped with a warning.
std::vector<double> wait_samples(const UserRecord& user);

WaitTimeModel fit_wait_time(const UserRecord& user, double population_fallback);

// Median of history-based mean waits, or kDefaultFallbackWait.
double population_fallback(const std::vector<WaitTimeModel>& models);

// 1 - exp(-t / mean_wait). Throws NegativeDeadline.
double prob_within(const WaitTimeModel& model, double t);
double prob_within(double mean_wait, double t);

bool passes_cutoff(const WaitTimeModel& model, double t, double cutoff);

nlohmann::json wait_model_to_json(const WaitTimeModel& m);
WaitTimeModel wait_model_from_json(const nlohmann::json& j);

}  // namespace propagator

#endif  // PROPAGATOR_WAITTIME_H_
