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

#include "propagator/service.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

#include "propagator/util.h"
#include "propagator/waittime.h"

namespace propagator {

using nlohmann::json;

Timestamp SystemClock::now() const {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

SimulatorBackend::SimulatorBackend(std::vector<SyntheticUser> users, uint64_t seed)
    : users_(std::move(users)), seed_(seed) {
  for (std::size_t i = 0; i < users_.size(); ++i) index_.emplace(users_[i].record.user_id, i);
}

std::optional<Timestamp> SimulatorBackend::schedule(const std::string& campaign_id, const UserRecord& user,
                                                    Timestamp dispatched_at) {
  const auto it = index_.find(user.user_id);
  if (it == index_.end()) return std::nullopt;
  const auto r = behavior_oracle(users_[it->second], dispatched_at, derive_seed(seed_, campaign_id));
  if (!r.wait) return std::nullopt;
  return dispatched_at + static_cast<Timestamp>(std::llround(*r.wait));
}

void CampaignDefinition::validate(std::size_t message_limit) const {
  if (message_template.find("{user}") == std::string::npos)
    throw Error("InvalidTemplate", "template must contain {user}");
  if (utf8_length(message_template) > message_limit)
    throw Error("InvalidTemplate", "template longer than " + std::to_string(message_limit) + " characters");
  if (!(deadline > 0)) throw Error("InvalidCampaign", "deadline must be positive");
  if (!(cutoff >= 0 && cutoff <= 1)) throw Error("InvalidCampaign", "cutoff must lie in [0, 1]");
  if (top_n < 1) throw Error("InvalidCampaign", "top_n must be >= 1");
  if (model_id.empty()) throw Error("InvalidCampaign", "model_id is required");
}

json CampaignDefinition::to_json() const {
  return {{"keywords", keywords}, {"message_template", message_template}, {"deadline", deadline},
          {"cutoff", cutoff},     {"top_n", top_n},                       {"model_id", model_id}};
}

CampaignDefinition CampaignDefinition::from_json(const json& j) {
  CampaignDefinition d;
  try {
    if (!j.is_object()) throw Error("InvalidCampaign", "campaign definition must be an object");
    d.keywords = j.value("keywords", d.keywords);
    d.message_template = j.value("message_template", d.message_template);
    if (j.contains("deadline")) {
      const auto& t = j["deadline"];
      d.deadline = t.is_string() ? parse_duration(t.get<std::string>()) : t.get<double>();
    }
    d.cutoff = j.value("cutoff", d.cutoff);
    if (j.contains("top_n")) {
      const auto n = j["top_n"].get<int64_t>();
      if (n < 1) throw Error("InvalidCampaign", "top_n must be >= 1");
      d.top_n = static_cast<std::size_t>(n);
    }
    d.model_id = j.value("model_id", d.model_id);
  } catch (const json::exception& e) {
    throw Error("InvalidCampaign", e.what());
  }
  return d;
}

json CampaignEvent::to_json() const {
  return {{"seq", sequence}, {"ts", timestamp}, {"campaign_id", campaign_id}, {"kind", kind},
          {"payload", payload}};
}

CampaignEvent CampaignEvent::from_json(const json& j) {
  CampaignEvent e;
  try {
    e.sequence = j.at("seq").get<uint64_t>();
    e.timestamp = j.at("ts").get<Timestamp>();
    e.campaign_id = j.at("campaign_id").get<std::string>();
    e.kind = j.at("kind").get<std::string>();
    e.payload = j.at("payload");
  } catch (const json::exception& ex) {
    throw Error("CorruptLog", ex.what());
  }
  return e;
}

json CampaignMetrics::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"contacted", contacted},
          {"retweeted", retweeted},
          {"rate", opt(rate)},
          {"windowed_rate", opt(windowed_rate)},
          {"window_seconds", window},
          {"unit_info_reach", reach ? json(reach->value) : json(nullptr)},
          {"overlap_adjusted", reach ? json(reach->overlap_adjusted) : json(nullptr)}};
}

bool matches_keywords(const UserRecord& user, const std::vector<std::string>& keywords) {
  if (keywords.empty()) return true;
  std::vector<std::string> lowered;
  for (const auto& k : keywords)
    if (!k.empty()) lowered.push_back(to_lower_ascii(k));
  if (lowered.empty()) return true;
  for (const auto& m : user.timeline) {
    const auto text = to_lower_ascii(m.text);
    for (const auto& k : lowered)
      if (text.find(k) != std::string::npos) return true;
  }
  return false;
}

std::string render_message(std::string_view message, const UserRecord& user) {
  const std::string handle = "@" + (user.screen_name.empty() ? user.user_id : user.screen_name);
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto hit = message.find("{user}", pos);
    if (hit == std::string_view::npos) break;
    out.append(message.substr(pos, hit - pos));
    out += handle;
    pos = hit + 6;
  }
  out.append(message.substr(pos));
  return out;
}

struct CampaignService::Campaign {
  std::string id;
  std::filesystem::path file;
  CampaignDefinition definition;
  CampaignState state = CampaignState::kOpen;
  std::mutex mutex;
  uint64_t next_sequence = 1;
  std::vector<CampaignEvent> log;
  std::vector<std::string> seen_order;
  std::unordered_map<std::string, UserRecord> users;
  std::unordered_map<std::string, ScoredCandidate> scores;
  std::vector<WaitTimeModel> history_waits;
  std::vector<std::string> dispatch_order;
  std::unordered_map<std::string, Timestamp> dispatched;
  std::unordered_map<std::string, Timestamp> observed;
  std::set<std::pair<Timestamp, std::string>> pending;
};

namespace {

void append_line(const std::filesystem::path& file, const std::string& line) {
  const int fd = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("IoError", "cannot open " + file.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      ::close(fd);
      throw Error("IoError", "cannot append to " + file.string() + ": " + why);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw Error("IoError", "fsync failed on " + file.string() + ": " + why);
  }
  ::close(fd);
}

std::string campaign_name(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%04zu", n);
  return buf;
}

}  // namespace

CampaignService::CampaignService(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = std::make_shared<SystemClock>();
  if (!options_.backend) options_.backend = std::make_shared<LogOnlyBackend>();
  if (!options_.extractor) throw Error("InvalidArgument", "service needs a feature extractor");
  namespace fs = std::filesystem;
  fs::create_directories(options_.log_dir / "campaigns");
  fs::create_directories(options_.log_dir / "models");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(options_.log_dir / "models"))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto m = std::make_shared<const TrainedModel>(load_model(f));
    models_.emplace(m->id, std::move(m));
  }
  files.clear();
  for (const auto& e : fs::directory_iterator(options_.log_dir / "campaigns"))
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) replay(f);
}

CampaignService::~CampaignService() = default;

void CampaignService::replay(const std::filesystem::path& file) {
  auto c = std::make_unique<Campaign>();
  c->id = file.stem().string();
  c->file = file;
  std::istringstream in(read_file(file));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("CorruptLog", file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto e = CampaignEvent::from_json(j);
    if (e.sequence != c->next_sequence || e.campaign_id != c->id)
      throw Error("CorruptLog", file.string() + ":" + std::to_string(line_no) + ": sequence gap or foreign event");
    if (e.sequence == 1 && e.kind != "campaign_created")
      throw Error("CorruptLog", file.string() + ": log must start with campaign_created");
    apply(*c, e);
  }
  if (c->log.empty()) throw Error("CorruptLog", file.string() + ": empty campaign log");
  campaigns_.emplace(c->id, std::move(c));
}

void CampaignService::apply(Campaign& c, const CampaignEvent& e) {
  const auto& p = e.payload;
  try {
    if (e.kind == "campaign_created") {
      c.definition = CampaignDefinition::from_json(p.at("definition"));
    } else if (e.kind == "candidate_seen") {
      auto user = user_from_json(p.at("user"));
      auto score = candidate_from_json(p.at("candidate"));
      const auto wait = wait_model_from_json(p.at("wait_model"));
      if (wait.source == WaitSource::kHistory) c.history_waits.push_back(wait);
      c.seen_order.push_back(user.user_id);
      c.scores[user.user_id] = std::move(score);
      c.users[user.user_id] = std::move(user);
    } else if (e.kind == "dispatched") {
      const auto id = p.at("user_id").get<std::string>();
      c.dispatch_order.push_back(id);
      c.dispatched[id] = e.timestamp;
      if (p.contains("scheduled_observation") && !p["scheduled_observation"].is_null())
        c.pending.insert({p["scheduled_observation"].get<Timestamp>(), id});
    } else if (e.kind == "retweet_observed") {
      const auto id = p.at("user_id").get<std::string>();
      const auto at = p.at("observed_at").get<Timestamp>();
      c.observed[id] = at;
      for (auto it = c.pending.begin(); it != c.pending.end(); ++it)
        if (it->second == id) {
          c.pending.erase(it);
          break;
        }
    } else if (e.kind == "campaign_closed") {
      c.state = CampaignState::kClosed;
    } else {
      throw Error("CorruptLog", "unknown event kind " + e.kind);
    }
  } catch (const json::exception& ex) {
    throw Error("CorruptLog", std::string(e.kind) + ": " + ex.what());
  }
  c.log.push_back(e);
  c.next_sequence = e.sequence + 1;
}

void CampaignService::append(Campaign& c, const std::string& kind, json payload) {
  CampaignEvent e;
  e.sequence = c.next_sequence;
  e.timestamp = options_.clock->now();
  e.campaign_id = c.id;
  e.kind = kind;
  e.payload = std::move(payload);
  append_line(c.file, e.to_json().dump() + "\n");
  apply(c, e);
}

void CampaignService::flush_due(Campaign& c) {
  const auto now = options_.clock->now();
  while (!c.pending.empty() && c.pending.begin()->first <= now) {
    const auto [at, id] = *c.pending.begin();
    append(c, "retweet_observed", {{"user_id", id}, {"observed_at", at}, {"source", "backend"}});
  }
}

CampaignService::Campaign& CampaignService::find(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = campaigns_.find(id);
  if (it == campaigns_.end()) throw Error("UnknownCampaign", "no campaign '" + id + "'");
  return *it->second;
}

std::shared_ptr<const TrainedModel> CampaignService::model(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = models_.find(id);
  if (it == models_.end()) throw Error("UnknownModel", "no model '" + id + "'");
  return it->second;
}

std::string CampaignService::publish_model(std::string_view model_json) {
  auto parsed = std::make_shared<const TrainedModel>(parse_model(model_json));
  if (parsed->manifest != options_.extractor->manifest()->names)
    throw Error("ManifestMismatch", "model feature manifest differs from the service extractor");
  const auto id = parsed->id;
  std::unique_lock lock(registry_mutex_);
  if (!models_.count(id)) {
    save_model(*parsed, options_.log_dir / "models" / (id + ".json"));
    models_.emplace(id, std::move(parsed));
  }
  return id;
}

bool CampaignService::has_model(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  return models_.count(id) > 0;
}

std::string CampaignService::create_campaign(const CampaignDefinition& definition) {
  definition.validate(options_.message_limit);
  model(definition.model_id);
  std::unique_lock lock(registry_mutex_);
  auto c = std::make_unique<Campaign>();
  c->id = campaign_name(campaigns_.size() + 1);
  c->file = options_.log_dir / "campaigns" / (c->id + ".jsonl");
  if (std::filesystem::exists(c->file)) throw Error("CorruptLog", c->file.string() + " already exists");
  append(*c, "campaign_created", {{"definition", definition.to_json()}});
  const auto id = c->id;
  campaigns_.emplace(id, std::move(c));
  return id;
}

CampaignDefinition CampaignService::definition(const std::string& campaign_id) const {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  return c.definition;
}

CampaignState CampaignService::state(const std::string& campaign_id) const {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  return c.state;
}

std::vector<std::string> CampaignService::campaign_ids() const {
  std::shared_lock lock(registry_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : campaigns_) ids.push_back(id);
  return ids;
}

std::size_t CampaignService::ingest_candidates(const std::string& campaign_id,
                                               const std::vector<UserRecord>& users) {
  auto& c = find(campaign_id);
  CampaignDefinition def;
  {
    std::lock_guard lock(c.mutex);
    if (c.state == CampaignState::kClosed) throw Error("CampaignClosed", "campaign " + campaign_id + " is closed");
    def = c.definition;
  }
  const auto m = model(def.model_id);
  const auto now = options_.clock->now();

  // Score outside the campaign lock; only the append is serialized.
  struct Scored {
    const UserRecord* user;
    double probability;
    WaitTimeModel wait;
  };
  std::vector<Scored> batch;
  std::set<std::string> in_batch;
  for (const auto& u : users) {
    if (!matches_keywords(u, def.keywords) || !in_batch.insert(u.user_id).second) continue;
    batch.push_back({&u, predict_proba(*m, options_.extractor->assemble(u, now)), fit_wait_time(u, kDefaultFallbackWait)});
  }

  std::lock_guard lock(c.mutex);
  if (c.state == CampaignState::kClosed) throw Error("CampaignClosed", "campaign " + campaign_id + " is closed");
  flush_due(c);
  std::vector<WaitTimeModel> history = c.history_waits;
  for (const auto& s : batch)
    if (s.wait.source == WaitSource::kHistory && !c.users.count(s.user->user_id)) history.push_back(s.wait);
  const double fallback = population_fallback(history);
  std::size_t accepted = 0;
  for (auto& s : batch) {
    if (c.users.count(s.user->user_id)) continue;
    if (s.wait.source == WaitSource::kPopulationFallback) s.wait.mean_wait = fallback;
    ScoredCandidate sc;
    sc.user_id = s.user->user_id;
    sc.retweet_probability = s.probability;
    sc.followers_count = s.user->followers_count;
    sc.mean_wait = s.wait.mean_wait;
    sc.prob_within_deadline = prob_within(sc.mean_wait, def.deadline);
    sc.eligible = sc.prob_within_deadline >= def.cutoff;
    append(c, "candidate_seen",
           {{"user", user_to_json(*s.user)}, {"candidate", candidate_to_json(sc)},
            {"wait_model", wait_model_to_json(s.wait)}});
    ++accepted;
  }
  return accepted;
}

std::vector<ScoredCandidate> CampaignService::recommendations(const std::string& campaign_id) {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  flush_due(c);
  std::vector<ScoredCandidate> open;
  for (const auto& id : c.seen_order)
    if (!c.dispatched.count(id)) open.push_back(c.scores.at(id));
  return rank_candidates(std::move(open), c.definition.deadline, c.definition.cutoff, c.definition.top_n);
}

std::vector<ScoredCandidate> CampaignService::candidates(const std::string& campaign_id) {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  std::vector<ScoredCandidate> out;
  for (const auto& id : c.seen_order) out.push_back(c.scores.at(id));
  return out;
}

CampaignEvent CampaignService::dispatch(const std::string& campaign_id, const std::string& user_id,
                                        std::optional<std::string> message) {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  flush_due(c);
  if (c.state == CampaignState::kClosed) throw Error("CampaignClosed", "campaign " + campaign_id + " is closed");
  const auto user = c.users.find(user_id);
  if (user == c.users.end()) throw Error("UnknownCandidate", "no candidate '" + user_id + "'");
  if (c.dispatched.count(user_id)) throw Error("AlreadyDispatched", "'" + user_id + "' was already contacted");
  const auto rendered = render_message(message.value_or(c.definition.message_template), user->second);
  if (utf8_length(rendered) > options_.message_limit)
    throw Error("MessageTooLong", "message has " + std::to_string(utf8_length(rendered)) + " characters, limit " +
                                      std::to_string(options_.message_limit));
  const auto now = options_.clock->now();
  const auto scheduled = options_.backend->schedule(campaign_id, user->second, now);
  append(c, "dispatched",
         {{"user_id", user_id},
          {"message", rendered},
          {"scheduled_observation", scheduled ? json(*scheduled) : json(nullptr)}});
  auto event = c.log.back();
  flush_due(c);
  return event;
}

CampaignEvent CampaignService::record_observation(const std::string& campaign_id, const std::string& user_id,
                                                  Timestamp observed_at) {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  flush_due(c);
  if (!c.users.count(user_id)) throw Error("UnknownCandidate", "no candidate '" + user_id + "'");
  const auto sent = c.dispatched.find(user_id);
  if (sent == c.dispatched.end()) throw Error("NotDispatched", "'" + user_id + "' was never contacted");
  if (c.observed.count(user_id)) throw Error("AlreadyObserved", "retweet of '" + user_id + "' already recorded");
  if (observed_at < sent->second)
    throw Error("InvalidObservation", "observation precedes the dispatch of '" + user_id + "'");
  append(c, "retweet_observed", {{"user_id", user_id}, {"observed_at", observed_at}, {"source", "operator"}});
  return c.log.back();
}

CampaignMetrics CampaignService::metrics(const std::string& campaign_id) {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  flush_due(c);
  CampaignMetrics m;
  m.window = c.definition.deadline;
  std::vector<ContactOutcome> outcomes;
  for (const auto& id : c.dispatch_order) {
    ContactOutcome o;
    o.user_id = id;
    o.dispatched_at = c.dispatched.at(id);
    if (const auto it = c.observed.find(id); it != c.observed.end()) {
      o.retweeted = true;
      o.retweet_at = it->second;
      ++m.retweeted;
    }
    const auto& u = c.users.at(id);
    o.follower_ids = u.follower_ids;
    o.followers_count = u.followers_count;
    outcomes.push_back(std::move(o));
  }
  m.contacted = outcomes.size();
  if (!outcomes.empty()) {
    m.rate = retweeting_rate(outcomes);
    m.windowed_rate = retweeting_rate(outcomes, m.window);
    m.reach = unit_info_reach(outcomes);
  }
  return m;
}

void CampaignService::close_campaign(const std::string& campaign_id) {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  flush_due(c);
  if (c.state == CampaignState::kClosed) return;
  append(c, "campaign_closed", json::object());
}

std::vector<CampaignEvent> CampaignService::events(const std::string& campaign_id) const {
  auto& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  return c.log;
}

}  // namespace propagator
