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

#ifndef PROPAGATOR_TESTS_SERVICE_FIXTURE_H_
#define PROPAGATOR_TESTS_SERVICE_FIXTURE_H_

#include <memory>
#include <string>
#include <vector>

#include "fixtures.h"
#include "propagator/personality.h"
#include "propagator/service.h"
#include "propagator/simulate.h"

namespace propagator::testing {

inline const FeatureExtractor& shared_extractor() {
  static const FeatureExtractor extractor(default_lexicon(), default_trait_mapping());
  return extractor;
}

// Small forest trained once on a labeled synthetic population.
inline const std::string& shared_model_json() {
  static const std::string text = [] {
    PopulationConfig cfg;
    cfg.n_users = 300;
    cfg.seed = 21;
    const auto users = generate_population(cfg);
    const auto table = build_table(label_population(users, cfg.request_time, 5), shared_extractor());
    ModelSpec spec;
    spec.trees = 15;
    spec.seed = 3;
    spec.imbalance = {ImbalanceSetting::Kind::kWeighted, 20.0};
    return serialize_model(train(spec, table));
  }();
  return text;
}

// Synthetic users that serve as campaign candidates.
inline const std::vector<SyntheticUser>& candidate_pool() {
  static const std::vector<SyntheticUser> users = [] {
    PopulationConfig cfg;
    cfg.n_users = 120;
    cfg.seed = 77;
    return generate_population(cfg);
  }();
  return users;
}

inline std::vector<UserRecord> candidate_records(std::size_t n = 120) {
  std::vector<UserRecord> out;
  for (std::size_t i = 0; i < n && i < candidate_pool().size(); ++i) out.push_back(candidate_pool()[i].record);
  return out;
}

// Every dispatch is answered after a fixed delay.
class FixedDelayBackend final : public DispatchBackend {
 public:
  explicit FixedDelayBackend(Timestamp delay) : delay_(delay) {}
  std::optional<Timestamp> schedule(const std::string&, const UserRecord&, Timestamp at) override {
    return at + delay_;
  }

 private:
  Timestamp delay_;
};

struct ServiceEnv {
  std::filesystem::path dir;
  std::shared_ptr<SimulatedClock> clock = std::make_shared<SimulatedClock>(kT0);
  std::shared_ptr<DispatchBackend> backend = std::make_shared<LogOnlyBackend>();

  std::unique_ptr<CampaignService> open() const {
    ServiceOptions o;
    o.log_dir = dir;
    o.clock = clock;
    o.backend = backend;
    o.extractor = std::shared_ptr<const FeatureExtractor>(&shared_extractor(), [](const FeatureExtractor*) {});
    return std::make_unique<CampaignService>(std::move(o));
  }
};

inline CampaignDefinition basic_campaign(const std::string& model_id) {
  CampaignDefinition d;
  d.model_id = model_id;
  d.message_template = "Hi {user}, please share this alert";
  return d;
}

}  // namespace propagator::testing

#endif  // PROPAGATOR_TESTS_SERVICE_FIXTURE_H_
