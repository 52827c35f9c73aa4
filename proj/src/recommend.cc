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

#include "propagator/recommend.h"

#include <algorithm>
#include <unordered_set>

#include "propagator/util.h"
#include "propagator/waittime.h"

namespace propagator {

nlohmann::json candidate_to_json(const ScoredCandidate& c) {
  return {{"user_id", c.user_id},
          {"retweet_probability", c.retweet_probability},
          {"prob_within_deadline", c.prob_within_deadline},
          {"followers_count", c.followers_count},
          {"mean_wait", c.mean_wait},
          {"eligible", c.eligible}};
}

ScoredCandidate candidate_from_json(const nlohmann::json& j) {
  ScoredCandidate c;
  c.user_id = j.at("user_id").get<std::string>();
  c.retweet_probability = j.at("retweet_probability").get<double>();
  c.prob_within_deadline = j.value("prob_within_deadline", 0.0);
  c.followers_count = j.value("followers_count", int64_t{0});
  c.mean_wait = j.at("mean_wait").get<double>();
  c.eligible = j.value("eligible", false);
  return c;
}

nlohmann::json candidates_to_json(const std::vector<ScoredCandidate>& cs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& c : cs) a.push_back(candidate_to_json(c));
  return a;
}

std::vector<ScoredCandidate> rank_candidates(std::vector<ScoredCandidate> candidates, double t,
                                             double cutoff, std::size_t n) {
  if (!(cutoff >= 0 && cutoff <= 1)) throw Error("InvalidCutoff", "cutoff must lie in [0, 1]");
  for (auto& c : candidates) {
    c.prob_within_deadline = prob_within(c.mean_wait, t);
    c.eligible = c.prob_within_deadline >= cutoff;
  }
  std::erase_if(candidates, [](const ScoredCandidate& c) { return !c.eligible; });
  std::sort(candidates.begin(), candidates.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.retweet_probability != b.retweet_probability)
      return a.retweet_probability > b.retweet_probability;
    if (a.prob_within_deadline != b.prob_within_deadline)
      return a.prob_within_deadline > b.prob_within_deadline;
    return a.user_id < b.user_id;
  });
  if (candidates.size() > n) candidates.resize(n);
  return candidates;
}

namespace {

bool counts_as_retweet(const ContactOutcome& o, std::optional<double> window) {
  if (!o.retweeted) return false;
  if (!window) return true;
  if (!o.retweet_at) return false;
  return static_cast<double>(*o.retweet_at - o.dispatched_at) <= *window;
}

}  // namespace

double retweeting_rate(const std::vector<ContactOutcome>& outcomes, std::optional<double> window) {
  if (outcomes.empty()) throw Error("EmptyOutcomes", "no contacts");
  const auto hits = std::count_if(outcomes.begin(), outcomes.end(),
                                  [&](const ContactOutcome& o) { return counts_as_retweet(o, window); });
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

InfoReach unit_info_reach(const std::vector<ContactOutcome>& outcomes, ReachMode mode) {
  if (outcomes.empty()) throw Error("EmptyOutcomes", "no contacts");
  const double n = static_cast<double>(outcomes.size());
  bool all_sets = true;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    if (!o.retweeted) continue;
    sum += static_cast<double>(o.followers_count);
    if (!o.follower_ids) all_sets = false;
  }
  if (mode == ReachMode::kSum || !all_sets) return {sum / n, false};
  std::unordered_set<std::string> distinct;
  for (const auto& o : outcomes)
    if (o.retweeted) distinct.insert(o.follower_ids->begin(), o.follower_ids->end());
  return {static_cast<double>(distinct.size()) / n, true};
}

}  // namespace propagator
