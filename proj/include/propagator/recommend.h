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

#ifndef PROPAGATOR_RECOMMEND_H_
#define PROPAGATOR_RECOMMEND_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "propagator/corpus.h"

namespace propagator {

inline constexpr double kDefaultCutoff = 0.7;
inline constexpr double kDefaultDeadline = 24.0 * 3600.0;

struct ScoredCandidate {
  std::string user_id;
  double retweet_probability = 0.0;
  double prob_within_deadline = 0.0;
  int64_t followers_count = 0;
  double mean_wait = 0.0;  // seconds
  bool eligible = false;

  bool operator==(const ScoredCandidate&) const = default;
};

nlohmann::json candidate_to_json(const ScoredCandidate& c);
ScoredCandidate candidate_from_json(const nlohmann::json& j);
nlohmann::json candidates_to_json(const std::vector<ScoredCandidate>& cs);

// Recomputes prob_within_deadline from mean_wait, keeps candidates at or above
// the cutoff, orders by (retweet_probability desc, prob_within_deadline desc,
// user_id asc) and truncates to n.
std::vector<ScoredCandidate> rank_candidates(std::vector<ScoredCandidate> candidates, double t,
                                             double cutoff, std::size_t n);

struct ContactOutcome {
  std::string user_id;
  Timestamp dispatched_at = 0;
  bool retweeted = false;
  std::optional<Timestamp> retweet_at;
  std::optional<IdSet> follower_ids;
  int64_t followers_count = 0;
};

// Retweeters (within `window` seconds of dispatch when given) over contacts.
// Throws EmptyOutcomes.
double retweeting_rate(const std::vector<ContactOutcome>& outcomes,
                       std::optional<double> window = std::nullopt);

enum class ReachMode { kDistinctWhenAvailable, kSum };

struct InfoReach {
  double value = 0.0;
  bool overlap_adjusted = false;
};

// Distinct followers of all retweeters per contacted user when every retweeter
// has a follower set; otherwise the plain follower-count sum, flagged.
InfoReach unit_info_reach(const std::vector<ContactOutcome>& outcomes,
                          ReachMode mode = ReachMode::kDistinctWhenAvailable);

}  // namespace propagator

#endif  // PROPAGATOR_RECOMMEND_H_
