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

#ifndef PROPAGATOR_SERVICE_H_
#define PROPAGATOR_SERVICE_H_

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "propagator/classify.h"
#include "propagator/corpus.h"
#include "propagator/features.h"
#include "propagator/recommend.h"
#include "propagator/simulate.h"

namespace propagator {

inline constexpr std::size_t kDefaultMessageLimit = 280;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(Timestamp start) : now_(start) {}
  Timestamp now() const override { return now_.load(); }
  void set(Timestamp t) { now_.store(t); }
  void advance(Timestamp seconds) { now_.fetch_add(seconds); }

 private:
  std::atomic<Timestamp> now_;
};

// Decides at dispatch time whether and when a retweet will be observed.
class DispatchBackend {
 public:
  virtual ~DispatchBackend() = default;
  virtual std::optional<Timestamp> schedule(const std::string& campaign_id, const UserRecord& user,
                                            Timestamp dispatched_at) = 0;
};

// Records dispatches only; observations arrive through record_observation.
class LogOnlyBackend final : public DispatchBackend {
 public:
  std::optional<Timestamp> schedule(const std::string&, const UserRecord&, Timestamp) override {
    return std::nullopt;
  }
};

// Answers with the behaviour oracle of a synthetic population.
class SimulatorBackend final : public DispatchBackend {
 public:
  SimulatorBackend(std::vector<SyntheticUser> users, uint64_t seed);
  std::optional<Timestamp> schedule(const std::string& campaign_id, const UserRecord& user,
                                    Timestamp dispatched_at) override;

 private:
  std::vector<SyntheticUser> users_;
  std::unordered_map<std::string, std::size_t> index_;
  uint64_t seed_;
};

struct CampaignDefinition {
  std::vector<std::string> keywords;  // empty matches every record
  std::string message_template = "{user}";
  double deadline = kDefaultDeadline;
  double cutoff = kDefaultCutoff;
  std::size_t top_n = 10;
  std::string model_id;

  // Throws InvalidTemplate or InvalidCampaign.
  void validate(std::size_t message_limit = kDefaultMessageLimit) const;
  nlohmann::json to_json() const;
  static CampaignDefinition from_json(const nlohmann::json& j);
};

enum class CampaignState { kOpen, kClosed };

struct CampaignEvent {
  uint64_t sequence = 0;
  Timestamp timestamp = 0;
  std::string campaign_id;
  std::string kind;  // campaign_created, candidate_seen, dispatched, retweet_observed, campaign_closed
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static CampaignEvent from_json(const nlohmann::json& j);
};

struct CampaignMetrics {
  std::size_t contacted = 0;
  std::size_t retweeted = 0;
  std::optional<double> rate;
  std::optional<double> windowed_rate;
  double window = kDefaultDeadline;
  std::optional<InfoReach> reach;

  nlohmann::json to_json() const;
};

// Matches when any timeline text contains a keyword, ignoring ASCII case.
bool matches_keywords(const UserRecord& user, const std::vector<std::string>& keywords);

// Replaces every {user} with @screen_name (or the user id when unnamed).
std::string render_message(std::string_view message, const UserRecord& user);

struct ServiceOptions {
  std::filesystem::path log_dir;
  std::shared_ptr<const Clock> clock;
  std::shared_ptr<DispatchBackend> backend;
  std::shared_ptr<const FeatureExtractor> extractor;
  std::size_t message_limit = kDefaultMessageLimit;
};

// Event-sourced campaign engine. Every campaign lives in
// log_dir/campaigns/<id>.jsonl and published models in log_dir/models/.
// Construction replays whatever is already on disk.
class CampaignService {
 public:
  explicit CampaignService(ServiceOptions options);
  ~CampaignService();
  CampaignService(const CampaignService&) = delete;
  CampaignService& operator=(const CampaignService&) = delete;

  // Throws CorruptModel, VersionMismatch or ManifestMismatch.
  std::string publish_model(std::string_view model_json);
  bool has_model(const std::string& id) const;

  // Throws UnknownModel, InvalidTemplate, InvalidCampaign.
  std::string create_campaign(const CampaignDefinition& definition);
  CampaignDefinition definition(const std::string& campaign_id) const;
  CampaignState state(const std::string& campaign_id) const;
  std::vector<std::string> campaign_ids() const;

  // Throws UnknownCampaign, CampaignClosed.
  std::size_t ingest_candidates(const std::string& campaign_id, const std::vector<UserRecord>& users);
  std::vector<ScoredCandidate> recommendations(const std::string& campaign_id);
  // Every candidate_seen snapshot, in log order.
  std::vector<ScoredCandidate> candidates(const std::string& campaign_id);

  // `message` defaults to the campaign template. Throws UnknownCampaign,
  // CampaignClosed, UnknownCandidate, AlreadyDispatched, MessageTooLong.
  CampaignEvent dispatch(const std::string& campaign_id, const std::string& user_id,
                         std::optional<std::string> message = std::nullopt);

  // Throws UnknownCampaign, UnknownCandidate, NotDispatched,
  // AlreadyObserved, InvalidObservation.
  CampaignEvent record_observation(const std::string& campaign_id, const std::string& user_id,
                                   Timestamp observed_at);

  CampaignMetrics metrics(const std::string& campaign_id);
  void close_campaign(const std::string& campaign_id);
  std::vector<CampaignEvent> events(const std::string& campaign_id) const;

  Timestamp now() const { return options_.clock->now(); }

 private:
  struct Campaign;
  Campaign& find(const std::string& id) const;
  std::shared_ptr<const TrainedModel> model(const std::string& id) const;
  void append(Campaign& c, const std::string& kind, nlohmann::json payload);
  void apply(Campaign& c, const CampaignEvent& e);
  void flush_due(Campaign& c);
  void replay(const std::filesystem::path& file);

  ServiceOptions options_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<const TrainedModel>> models_;
  std::map<std::string, std::unique_ptr<Campaign>> campaigns_;
};

}  // namespace propagator

#endif  // PROPAGATOR_SERVICE_H_
