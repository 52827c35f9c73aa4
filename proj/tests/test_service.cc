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

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "propagator/waittime.h"
#include "service_fixture.h"

namespace propagator {
namespace {

using testing::basic_campaign;
using testing::candidate_records;
using testing::error_code;
using testing::kT0;
using testing::ServiceEnv;
using testing::shared_model_json;
using testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    env.dir = tmp.path();
    svc = env.open();
    model_id = svc->publish_model(shared_model_json());
  }
  void reopen() {
    svc.reset();
    svc = env.open();
  }

  TempDir tmp;
  ServiceEnv env;
  std::unique_ptr<CampaignService> svc;
  std::string model_id;
};

TEST_F(ServiceTest, DefinitionDefaultsAndValidation) {
  CampaignDefinition d;
  EXPECT_EQ(d.deadline, 86400);
  EXPECT_EQ(d.cutoff, 0.7);
  auto bad = basic_campaign(model_id);
  bad.message_template = "no placeholder here";
  EXPECT_EQ(error_code([&] { svc->create_campaign(bad); }), "InvalidTemplate");
  bad = basic_campaign(model_id);
  bad.cutoff = 1.2;
  EXPECT_EQ(error_code([&] { svc->create_campaign(bad); }), "InvalidCampaign");
  EXPECT_EQ(error_code([&] { svc->create_campaign(basic_campaign("missing")); }), "UnknownModel");
  const auto id = svc->create_campaign(basic_campaign(model_id));
  EXPECT_EQ(svc->state(id), CampaignState::kOpen);
  EXPECT_EQ(svc->definition(id).to_json(), basic_campaign(model_id).to_json());
  auto j = basic_campaign(model_id).to_json();
  j["deadline"] = "12h";
  EXPECT_EQ(CampaignDefinition::from_json(j).deadline, 43200);
}

TEST_F(ServiceTest, ModelPublishing) {
  EXPECT_TRUE(svc->has_model(model_id));
  EXPECT_EQ(svc->publish_model(shared_model_json()), model_id);
  EXPECT_TRUE(std::filesystem::exists(tmp / "models" / (model_id + ".json")));
  auto j = nlohmann::json::parse(shared_model_json());
  std::swap(j["manifest"][0], j["manifest"][1]);
  EXPECT_EQ(error_code([&] { svc->publish_model(j.dump()); }), "ManifestMismatch");
  EXPECT_EQ(error_code([&] { svc->publish_model("{"); }), "CorruptModel");
}

TEST_F(ServiceTest, IngestFiltersByKeyword) {
  auto def = basic_campaign(model_id);
  def.keywords = {"Bird Flu"};
  const auto id = svc->create_campaign(def);
  std::vector<UserRecord> batch;
  for (int i = 0; i < 10; ++i) {
    auto u = testing::user("k" + std::to_string(i));
    u.timeline = {testing::msg(kT0 - 500, i < 6 ? "worried about BIRD FLU today" : "nice weather")};
    batch.push_back(u);
  }
  EXPECT_EQ(svc->ingest_candidates(id, batch), 6u);
  EXPECT_EQ(svc->ingest_candidates(id, batch), 0u);
  EXPECT_EQ(svc->candidates(id).size(), 6u);
  EXPECT_TRUE(matches_keywords(batch[7], {}));
  svc->close_campaign(id);
  EXPECT_EQ(error_code([&] { svc->ingest_candidates(id, batch); }), "CampaignClosed");
  EXPECT_EQ(error_code([&] { svc->ingest_candidates("c9999", batch); }), "UnknownCampaign");
}

TEST_F(ServiceTest, RecommendationsMatchOfflineRanking) {
  const auto id = svc->create_campaign(basic_campaign(model_id));
  EXPECT_TRUE(svc->recommendations(id).empty());
  svc->ingest_candidates(id, candidate_records());
  const auto all = svc->candidates(id);
  ASSERT_EQ(all.size(), 120u);

  // Offline: score each record with the same model and fallback rule.
  const auto model = parse_model(shared_model_json());
  std::vector<WaitTimeModel> waits;
  const auto records = candidate_records();
  for (const auto& u : records) waits.push_back(fit_wait_time(u, kDefaultFallbackWait));
  const double fallback = population_fallback(waits);
  std::vector<ScoredCandidate> offline;
  for (std::size_t i = 0; i < waits.size(); ++i) {
    const auto& u = records[i];
    ScoredCandidate c;
    c.user_id = u.user_id;
    c.retweet_probability = predict_proba(model, testing::shared_extractor().assemble(u, kT0));
    c.followers_count = u.followers_count;
    c.mean_wait = waits[i].source == WaitSource::kHistory ? waits[i].mean_wait : fallback;
    c.prob_within_deadline = prob_within(c.mean_wait, 86400);
    c.eligible = c.prob_within_deadline >= 0.7;
    offline.push_back(c);
  }
  const auto expected = rank_candidates(offline, 86400, 0.7, 10);
  const auto got = svc->recommendations(id);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], expected[i]) << i;

  svc->dispatch(id, got[0].user_id);
  const auto after = svc->recommendations(id);
  for (const auto& c : after) EXPECT_NE(c.user_id, got[0].user_id);
}

TEST_F(ServiceTest, DispatchRulesAndRendering) {
  const auto id = svc->create_campaign(basic_campaign(model_id));
  auto u = testing::user("solo");
  u.screen_name = "solo_account";
  svc->ingest_candidates(id, {u});
  const auto e = svc->dispatch(id, "solo");
  EXPECT_EQ(e.kind, "dispatched");
  EXPECT_EQ(e.payload["message"], "Hi @solo_account, please share this alert");
  EXPECT_TRUE(e.payload["scheduled_observation"].is_null());
  EXPECT_EQ(error_code([&] { svc->dispatch(id, "solo"); }), "AlreadyDispatched");
  EXPECT_EQ(error_code([&] { svc->dispatch(id, "ghost"); }), "UnknownCandidate");

  svc->ingest_candidates(id, {testing::user("long")});
  EXPECT_EQ(error_code([&] { svc->dispatch(id, "long", std::string(281, 'x')); }), "MessageTooLong");
  EXPECT_NO_THROW(svc->dispatch(id, "long", std::string(280, 'x')));
}

TEST_F(ServiceTest, ObservationsAndMetrics) {
  const auto id = svc->create_campaign(basic_campaign(model_id));
  const auto zero = svc->metrics(id).to_json();
  EXPECT_EQ(zero["contacted"], 0);
  EXPECT_TRUE(zero["rate"].is_null());
  EXPECT_TRUE(zero["unit_info_reach"].is_null());

  std::vector<UserRecord> batch;
  for (int i = 0; i < 100; ++i) batch.push_back(testing::user("m" + std::to_string(i)));
  svc->ingest_candidates(id, batch);
  EXPECT_EQ(error_code([&] { svc->record_observation(id, "m0", kT0 + 10); }), "NotDispatched");
  for (int i = 0; i < 100; ++i) svc->dispatch(id, "m" + std::to_string(i));
  for (int i = 0; i < 19; ++i) svc->record_observation(id, "m" + std::to_string(i), kT0 + 600);
  EXPECT_EQ(error_code([&] { svc->record_observation(id, "m0", kT0 + 700); }), "AlreadyObserved");
  EXPECT_EQ(error_code([&] { svc->record_observation(id, "m50", kT0 - 1); }), "InvalidObservation");
  const auto m = svc->metrics(id);
  EXPECT_EQ(m.contacted, 100u);
  EXPECT_EQ(m.retweeted, 19u);
  EXPECT_EQ(*m.rate, 0.19);
  EXPECT_EQ(*m.windowed_rate, 0.19);
}

TEST_F(ServiceTest, ScheduledObservationLandsWithClock) {
  env.backend = std::make_shared<testing::FixedDelayBackend>(3600);
  reopen();
  const auto id = svc->create_campaign(basic_campaign(model_id));
  svc->ingest_candidates(id, {testing::user("d")});
  const auto e = svc->dispatch(id, "d");
  EXPECT_EQ(e.payload["scheduled_observation"], kT0 + 3600);
  env.clock->advance(3599);
  EXPECT_EQ(svc->metrics(id).retweeted, 0u);
  env.clock->advance(1);
  EXPECT_EQ(svc->metrics(id).retweeted, 1u);
  const auto log = svc->events(id);
  EXPECT_EQ(log.back().kind, "retweet_observed");
  EXPECT_EQ(log.back().payload["observed_at"], kT0 + 3600);
  EXPECT_EQ(log.back().payload["source"], "backend");
}

TEST_F(ServiceTest, RestartReplaysIdentically) {
  const auto id = svc->create_campaign(basic_campaign(model_id));
  svc->ingest_candidates(id, candidate_records(60));
  const auto recs = svc->recommendations(id);
  svc->dispatch(id, recs[0].user_id);
  svc->dispatch(id, recs[1].user_id);
  svc->record_observation(id, recs[1].user_id, kT0 + 50);
  const auto before_recs = candidates_to_json(svc->recommendations(id)).dump();
  const auto before_metrics = svc->metrics(id).to_json().dump();
  const auto file = tmp / "campaigns" / (id + ".jsonl");
  const auto before_log = slurp(file);

  reopen();
  EXPECT_EQ(candidates_to_json(svc->recommendations(id)).dump(), before_recs);
  EXPECT_EQ(svc->metrics(id).to_json().dump(), before_metrics);
  EXPECT_EQ(slurp(file), before_log);
  EXPECT_EQ(svc->campaign_ids(), std::vector<std::string>{id});
  EXPECT_EQ(error_code([&] { svc->dispatch(id, recs[0].user_id); }), "AlreadyDispatched");

  // A copied log directory replays to the same state.
  TempDir other;
  std::filesystem::copy(tmp.path(), other.path(), std::filesystem::copy_options::recursive);
  ServiceEnv copy = env;
  copy.dir = other.path();
  const auto copied = copy.open();
  EXPECT_EQ(candidates_to_json(copied->recommendations(id)).dump(), before_recs);
  EXPECT_EQ(copied->metrics(id).to_json().dump(), before_metrics);
}

TEST_F(ServiceTest, SequencesAreGapless) {
  const auto id = svc->create_campaign(basic_campaign(model_id));
  svc->ingest_candidates(id, candidate_records(20));
  svc->dispatch(id, candidate_records(1)[0].user_id);
  svc->close_campaign(id);
  const auto log = svc->events(id);
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(log[i].sequence, i + 1);
    EXPECT_EQ(log[i].campaign_id, id);
    EXPECT_EQ(CampaignEvent::from_json(log[i].to_json()).to_json(), log[i].to_json());
  }
  EXPECT_EQ(log.front().kind, "campaign_created");
  EXPECT_EQ(log.back().kind, "campaign_closed");

  // Dropping a middle line breaks the chain.
  const auto file = tmp / "campaigns" / (id + ".jsonl");
  std::istringstream in(slurp(file));
  std::string line, rewritten;
  for (int n = 0; std::getline(in, line); ++n)
    if (n != 3) rewritten += line + "\n";
  svc.reset();
  write_file_atomic(file, rewritten);
  EXPECT_EQ(error_code([&] { env.open(); }), "CorruptLog");
}

TEST_F(ServiceTest, ConcurrentDuplicateDispatchHasOneWinner) {
  const auto id = svc->create_campaign(basic_campaign(model_id));
  svc->ingest_candidates(id, {testing::user("hot")});
  std::atomic<int> ok{0}, dup{0}, other{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 100; ++i)
    threads.emplace_back([&] {
      try {
        svc->dispatch(id, "hot");
        ++ok;
      } catch (const Error& e) {
        (e.code() == "AlreadyDispatched" ? dup : other)++;
      }
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(dup.load(), 99);
  EXPECT_EQ(other.load(), 0);
  int dispatched = 0;
  for (const auto& e : svc->events(id)) dispatched += e.kind == "dispatched";
  EXPECT_EQ(dispatched, 1);
}

TEST(SimulatorBackend, FollowsOracle) {
  const auto& pool = testing::candidate_pool();
  SimulatorBackend backend(pool, 42);
  int scheduled = 0;
  for (const auto& su : pool) {
    const auto r = behavior_oracle(su, kT0, derive_seed(42, "c0001"));
    const auto s = backend.schedule("c0001", su.record, kT0);
    EXPECT_EQ(s.has_value(), r.retweeted);
    if (s) {
      EXPECT_EQ(*s, kT0 + static_cast<Timestamp>(std::llround(*r.wait)));
    }
    scheduled += s.has_value();
  }
  EXPECT_EQ(backend.schedule("c0001", testing::user("outsider"), kT0), std::nullopt);
  (void)scheduled;
}

}  // namespace
}  // namespace propagator
