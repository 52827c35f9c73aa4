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

#include "propagator/waittime.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "propagator/util.h"

namespace propagator {

std::vector<double> wait_samples(const UserRecord& user) {
  std::vector<double> samples;
  int discarded = 0;
  for (const auto& m : user.timeline) {
    if (!m.is_retweet || !m.original_timestamp) continue;
    const auto wait = m.timestamp - *m.original_timestamp;
    if (wait <= 0) {
      ++discarded;
      continue;
    }
    samples.push_back(static_cast<double>(wait));
  }
  if (discarded > 0)
    log_warning("discarded " + std::to_string(discarded) + " non-positive wait sample(s) for " +
                user.user_id);
  return samples;
}

WaitTimeModel fit_wait_time(const UserRecord& user, double fallback) {
  if (!(fallback > 0)) throw Error("InvalidFallback", "population fallback must be positive");
  const auto samples = wait_samples(user);
  WaitTimeModel m;
  m.user_id = user.user_id;
  if (samples.empty()) {
    m.mean_wait = fallback;
    m.sample_count = 0;
    m.source = WaitSource::kPopulationFallback;
    return m;
  }
  m.mean_wait = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  m.sample_count = static_cast<int>(samples.size());
  m.source = WaitSource::kHistory;
  return m;
}

double population_fallback(const std::vector<WaitTimeModel>& models) {
  std::vector<double> waits;
  for (const auto& m : models)
    if (m.source == WaitSource::kHistory) waits.push_back(m.mean_wait);
  if (waits.empty()) return kDefaultFallbackWait;
  std::sort(waits.begin(), waits.end());
  const auto n = waits.size();
  return n % 2 ? waits[n / 2] : 0.5 * (waits[n / 2 - 1] + waits[n / 2]);
}

double prob_within(double mean_wait, double t) {
  if (t < 0 || std::isnan(t)) throw Error("NegativeDeadline", "deadline must be >= 0");
  if (!(mean_wait > 0)) throw Error("InvalidWaitModel", "mean wait must be positive");
  return -std::expm1(-t / mean_wait);
}

double prob_within(const WaitTimeModel& model, double t) { return prob_within(model.mean_wait, t); }

bool passes_cutoff(const WaitTimeModel& model, double t, double cutoff) {
  if (!(cutoff >= 0 && cutoff <= 1)) throw Error("InvalidCutoff", "cutoff must lie in [0, 1]");
  return prob_within(model, t) >= cutoff;
}

nlohmann::json wait_model_to_json(const WaitTimeModel& m) {
  return {{"user_id", m.user_id},
          {"mean_wait", m.mean_wait},
          {"sample_count", m.sample_count},
          {"source", m.source == WaitSource::kHistory ? "history" : "population_fallback"}};
}

WaitTimeModel wait_model_from_json(const nlohmann::json& j) {
  WaitTimeModel m;
  m.user_id = j.at("user_id").get<std::string>();
  m.mean_wait = j.at("mean_wait").get<double>();
  m.sample_count = j.at("sample_count").get<int>();
  m.source = j.at("source").get<std::string>() == "history" ? WaitSource::kHistory
                                                            : WaitSource::kPopulationFallback;
  return m;
}

}  // namespace propagator
