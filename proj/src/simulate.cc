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

#include "propagator/simulate.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "propagator/metrics.h"
#include "propagator/util.h"
#include "propagator/waittime.h"

namespace propagator {

using nlohmann::json;

namespace {

constexpr int kFriendPool = 20000;
constexpr int kStrangerPool = 200000;

const std::vector<std::string>& general_words() {
  static const std::vector<std::string> w = {
      "the", "a", "and", "to", "of", "in", "is", "for", "on", "with", "this", "that", "we",
      "you", "i", "it", "be", "are", "at", "my", "just", "new", "now", "today", "good", "great",
      "people", "time", "day", "our", "so", "all", "but", "not", "will", "was", "me"};
  return w;
}

const std::vector<std::vector<std::string>>& topic_words() {
  static const std::vector<std::vector<std::string>> w = {
      {"news", "report", "breaking", "update", "police", "city", "safety", "alert"},
      {"flu", "bird", "virus", "health", "sick", "hospital", "vaccine", "h5n1"},
      {"friend", "family", "party", "meet", "talk", "share", "together", "buddy"},
      {"happy", "joy", "fun", "laugh", "nice", "sweet", "glad", "proud"},
      {"sad", "cry", "hate", "angry", "worried", "afraid", "hurt", "lonely"},
      {"work", "job", "office", "meeting", "project", "boss", "career", "business"},
      {"game", "movie", "music", "song", "weekend", "vacation", "relax", "team"},
      {"think", "know", "because", "maybe", "understand", "perhaps", "consider", "should"}};
  return w;
}

double lognormal(Rng& rng, double log_mean, double log_sd) {
  return std::exp(log_mean + log_sd * rng.normal());
}

std::string random_token(Rng& rng, int len) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string s;
  for (int i = 0; i < len; ++i) s += kAlphabet[rng.below(36)];
  return s;
}

template <typename T>
std::size_t pick_weighted(Rng& rng, const std::vector<T>& weights) {
  double total = 0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0) return i;
  }
  return weights.size() - 1;
}

std::vector<double> cyclic_profile(int buckets, int peak, double concentration) {
  std::vector<double> w(static_cast<std::size_t>(buckets));
  for (int b = 0; b < buckets; ++b)
    w[static_cast<std::size_t>(b)] =
        std::exp(concentration * std::cos(2.0 * M_PI * (b - peak) / static_cast<double>(buckets)));
  return w;
}

struct UserTraits {
  double rate = 1.0;  // statuses per day
  double retweet_rate = 0.2;
  double stranger_share = 0.5;
  double mention_rate = 0.2, hashtag_rate = 0.1, url_rate = 0.2;
};

std::string compose_text(Rng& rng, const UserTraits& tr, const std::array<std::size_t, 2>& topics,
                         const std::vector<std::string>& friends) {
  const auto& general = general_words();
  const auto& pools = topic_words();
  std::string text;
  auto append = [&](const std::string& w) {
    if (!text.empty()) text += ' ';
    text += w;
  };
  if (rng.bernoulli(tr.mention_rate))
    append("@" + (friends.empty() ? random_token(rng, 6) : friends[rng.below(friends.size())]));
  const auto words = 4 + rng.below(9);
  for (uint64_t i = 0; i < words; ++i) {
    if (rng.bernoulli(0.45)) {
      const auto& pool = pools[topics[rng.below(2)]];
      append(pool[rng.below(pool.size())]);
    } else {
      append(general[rng.below(general.size())]);
    }
  }
  if (rng.bernoulli(tr.hashtag_rate)) {
    const auto& pool = pools[topics[0]];
    append("#" + pool[rng.below(pool.size())]);
  }
  if (rng.bernoulli(tr.url_rate)) append("http://t.co/" + random_token(rng, 7));
  return text;
}

SyntheticUser make_user(const PopulationConfig& cfg, int index) {
  Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(index)));
  SyntheticUser su;
  auto& u = su.record;
  char id[32];
  std::snprintf(id, sizeof(id), "u%05d", index);
  u.user_id = id;
  u.screen_name = "user_" + random_token(rng, 3 + static_cast<int>(rng.below(10)));
  const double longevity_days =
      cfg.min_longevity_days + rng.uniform() * (cfg.max_longevity_days - cfg.min_longevity_days);
  u.created_at = cfg.request_time - static_cast<Timestamp>(std::llround(longevity_days * kSecondsPerDay));
  if (rng.bernoulli(0.7)) {
    const auto& pools = topic_words();
    const auto& pool = pools[rng.below(pools.size())];
    const auto words = 2 + rng.below(10);
    for (uint64_t i = 0; i < words; ++i) {
      if (!u.description.empty()) u.description += ' ';
      u.description += pool[rng.below(pool.size())];
    }
  }
  u.has_url = rng.bernoulli(0.4);
  u.friends_count = std::clamp<int64_t>(std::llround(lognormal(rng, cfg.friends_log_mean, cfg.friends_log_sd)),
                                        0, 5000);
  IdSet friend_set;
  while (static_cast<int64_t>(friend_set.size()) < u.friends_count)
    friend_set.insert("f" + std::to_string(rng.below(kFriendPool)));
  std::vector<std::string> friends(friend_set.begin(), friend_set.end());
  u.friend_ids = std::move(friend_set);

  UserTraits tr;
  tr.rate = std::clamp(lognormal(rng, cfg.log_rate_mean, cfg.log_rate_sd), 0.02, 50.0);
  tr.retweet_rate = 0.8 * std::pow(rng.uniform(), 1.5);
  tr.stranger_share = rng.uniform();
  tr.mention_rate = rng.uniform() * 0.6;
  tr.hashtag_rate = rng.uniform() * 0.5;
  tr.url_rate = rng.uniform() * 0.6;
  su.latent_mean_wait = lognormal(rng, std::log(cfg.wait_median_hours * kSecondsPerHour), cfg.wait_log_sd);

  std::vector<double> regime_weights;
  for (const auto& r : cfg.regimes) regime_weights.push_back(r.weight);
  const auto& regime = cfg.regimes[pick_weighted(rng, regime_weights)];
  const auto hour_w = cyclic_profile(24, static_cast<int>(rng.below(24)), regime.hour_concentration);
  const auto day_w = cyclic_profile(7, static_cast<int>(rng.below(7)), regime.day_concentration);
  const double day_w_max = *std::max_element(day_w.begin(), day_w.end());
  const std::array<std::size_t, 2> topics = {rng.below(topic_words().size()), rng.below(topic_words().size())};

  const auto posted = std::max<int64_t>(0, std::llround(tr.rate * longevity_days));
  u.statuses_count = posted;
  const auto length = static_cast<std::size_t>(std::min<int64_t>(posted, kMaxTimelineLength));
  const double span_days = std::min(longevity_days, std::max(1.0, static_cast<double>(length) / tr.rate));
  const auto span = std::max<uint64_t>(1, static_cast<uint64_t>(std::ceil(span_days)));

  Timestamp prev = 0;
  for (std::size_t i = 0; i < length; ++i) {
    Timestamp t;
    if (i > 0 && rng.bernoulli(regime.burstiness)) {
      t = prev + static_cast<Timestamp>(std::llround(rng.exponential(600.0)));
    } else {
      Timestamp day_start = 0;
      for (int tries = 0; tries < 20; ++tries) {
        day_start = cfg.request_time - static_cast<Timestamp>(rng.below(span) + 1) * kSecondsPerDay;
        if (rng.uniform() * day_w_max <= day_w[static_cast<std::size_t>(utc_weekday(day_start))]) break;
      }
      t = day_start + static_cast<Timestamp>(pick_weighted(rng, hour_w)) * kSecondsPerHour +
          static_cast<Timestamp>(rng.below(kSecondsPerHour));
    }
    t = std::clamp(t, u.created_at, cfg.request_time - 1);
    prev = t;
    Message m;
    m.timestamp = t;
    if (rng.bernoulli(tr.retweet_rate)) {
      m.is_retweet = true;
      const bool stranger = friends.empty() || rng.bernoulli(tr.stranger_share);
      m.original_author_id = stranger ? "s" + std::to_string(rng.below(kStrangerPool))
                                      : friends[rng.below(friends.size())];
      const auto wait = std::max<Timestamp>(1, std::llround(rng.exponential(su.latent_mean_wait)));
      m.original_timestamp = t - wait;
      m.text = "RT @" + *m.original_author_id + ": " + compose_text(rng, tr, topics, {});
    } else {
      m.text = compose_text(rng, tr, topics, friends);
    }
    const auto counts = count_entities(m.text);
    m.mention_count = counts.mentions;
    m.url_count = counts.urls;
    m.hashtag_count = counts.hashtags;
    u.timeline.push_back(std::move(m));
  }
  normalize_user(u);
  return su;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void PopulationConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error("InvalidConfig", what); };
  if (n_users < 10) fail("n_users must be >= 10");
  if (!(base_positive_rate > 0 && base_positive_rate < 1)) fail("base_positive_rate must lie in (0, 1)");
  if (request_time <= 0) fail("request_time must be positive");
  if (!(log_rate_sd >= 0) || !(wait_log_sd >= 0) || !(followers_log_sd >= 0) || !(friends_log_sd >= 0))
    fail("log-normal spreads must be >= 0");
  if (!(min_longevity_days >= 1) || !(max_longevity_days >= min_longevity_days)) fail("bad longevity range");
  if (regimes.empty()) fail("at least one activity regime is required");
  for (const auto& r : regimes)
    if (!(r.weight > 0) || !(r.burstiness >= 0 && r.burstiness <= 1) || !(r.hour_concentration >= 0) ||
        !(r.day_concentration >= 0))
      fail("invalid activity regime");
  if (!(wait_median_hours > 0)) fail("wait_median_hours must be positive");
  if (max_followers < 0) fail("max_followers must be >= 0");
  if (!(follower_overlap >= 0 && follower_overlap < 1)) fail("follower_overlap must lie in [0, 1)");
  if (!(willingness.noise_sd >= 0)) fail("noise_sd must be >= 0");
}

json PopulationConfig::to_json() const {
  json regimes_j = json::array();
  for (const auto& r : regimes)
    regimes_j.push_back({{"weight", r.weight},
                         {"hour_concentration", r.hour_concentration},
                         {"day_concentration", r.day_concentration},
                         {"burstiness", r.burstiness}});
  return {{"n_users", n_users},
          {"base_positive_rate", base_positive_rate},
          {"seed", seed},
          {"request_time", request_time},
          {"activity", {{"log_rate_mean", log_rate_mean}, {"log_rate_sd", log_rate_sd},
                        {"min_longevity_days", min_longevity_days},
                        {"max_longevity_days", max_longevity_days}, {"regimes", regimes_j}}},
          {"willingness", {{"activity", willingness.activity},
                           {"retweet_rate", willingness.retweet_rate},
                           {"stranger_fraction", willingness.stranger_fraction},
                           {"hour_entropy", willingness.hour_entropy},
                           {"followers", willingness.followers},
                           {"noise_sd", willingness.noise_sd}}},
          {"wait", {{"median_hours", wait_median_hours}, {"log_sd", wait_log_sd}}},
          {"followers", {{"log_mean", followers_log_mean}, {"log_sd", followers_log_sd},
                         {"max", max_followers}, {"overlap", follower_overlap}}},
          {"friends", {{"log_mean", friends_log_mean}, {"log_sd", friends_log_sd}}}};
}

PopulationConfig PopulationConfig::from_json(const json& j) {
  PopulationConfig c;
  try {
    c.n_users = j.value("n_users", c.n_users);
    c.base_positive_rate = j.value("base_positive_rate", c.base_positive_rate);
    c.seed = j.value("seed", c.seed);
    c.request_time = j.value("request_time", c.request_time);
    if (j.contains("activity")) {
      const auto& a = j["activity"];
      c.log_rate_mean = a.value("log_rate_mean", c.log_rate_mean);
      c.log_rate_sd = a.value("log_rate_sd", c.log_rate_sd);
      c.min_longevity_days = a.value("min_longevity_days", c.min_longevity_days);
      c.max_longevity_days = a.value("max_longevity_days", c.max_longevity_days);
      if (a.contains("regimes")) {
        c.regimes.clear();
        for (const auto& r : a["regimes"])
          c.regimes.push_back({r.value("weight", 1.0), r.value("hour_concentration", 0.0),
                               r.value("day_concentration", 0.0), r.value("burstiness", 0.0)});
      }
    }
    if (j.contains("willingness")) {
      const auto& w = j["willingness"];
      auto& m = c.willingness;
      m.activity = w.value("activity", m.activity);
      m.retweet_rate = w.value("retweet_rate", m.retweet_rate);
      m.stranger_fraction = w.value("stranger_fraction", m.stranger_fraction);
      m.hour_entropy = w.value("hour_entropy", m.hour_entropy);
      m.followers = w.value("followers", m.followers);
      m.noise_sd = w.value("noise_sd", m.noise_sd);
    }
    if (j.contains("wait")) {
      c.wait_median_hours = j["wait"].value("median_hours", c.wait_median_hours);
      c.wait_log_sd = j["wait"].value("log_sd", c.wait_log_sd);
    }
    if (j.contains("followers")) {
      const auto& f = j["followers"];
      c.followers_log_mean = f.value("log_mean", c.followers_log_mean);
      c.followers_log_sd = f.value("log_sd", c.followers_log_sd);
      c.max_followers = f.value("max", c.max_followers);
      c.follower_overlap = f.value("overlap", c.follower_overlap);
    }
    if (j.contains("friends")) {
      c.friends_log_mean = j["friends"].value("log_mean", c.friends_log_mean);
      c.friends_log_sd = j["friends"].value("log_sd", c.friends_log_sd);
    }
  } catch (const json::exception& e) {
    throw Error("InvalidConfig", e.what());
  }
  c.validate();
  return c;
}

PopulationConfig load_population_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error("InvalidConfig", e.what());
  }
  return PopulationConfig::from_json(j);
}

std::vector<SyntheticUser> generate_population(const PopulationConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.n_users);
  std::vector<SyntheticUser> users;
  users.reserve(n);
  for (std::size_t i = 0; i < n; ++i) users.push_back(make_user(config, static_cast<int>(i)));

  // Followers: heavy-tailed counts drawn from a shared pool whose size sets
  // how much the follower sets overlap.
  Rng frng(derive_seed(config.seed, "followers"));
  double total = 0;
  for (auto& su : users) {
    su.record.followers_count = std::clamp<int64_t>(
        std::llround(lognormal(frng, config.followers_log_mean, config.followers_log_sd)), 0,
        config.max_followers);
    total += static_cast<double>(su.record.followers_count);
  }
  const auto pool = std::max<uint64_t>(
      1, static_cast<uint64_t>(std::ceil(total * (1.0 - config.follower_overlap))));
  for (auto& su : users) {
    auto& u = su.record;
    u.followers_count = std::min<int64_t>(u.followers_count, static_cast<int64_t>(pool));
    std::unordered_set<uint64_t> picked;
    while (static_cast<int64_t>(picked.size()) < u.followers_count) picked.insert(frng.below(pool));
    IdSet ids;
    for (auto p : picked) ids.insert("p" + std::to_string(p));
    u.follower_ids = std::move(ids);
  }

  // Willingness: logistic in population z-scores of observable features.
  const auto& wm = config.willingness;
  const std::array<double, 5> coef = {wm.activity, wm.retweet_rate, wm.stranger_fraction, wm.hour_entropy,
                                      wm.followers};
  Eigen::MatrixXd predictors(static_cast<Eigen::Index>(n), 5);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = users[i].record;
    const auto act = extract_activity(u, config.request_time);
    const auto rt = extract_retweeting(u);
    const auto ready = extract_readiness(u, config.request_time);
    predictors.row(static_cast<Eigen::Index>(i)) << std::log1p(act[5]), rt[0], rt[2], ready[3],
        std::log1p(static_cast<double>(u.followers_count));
  }
  const Eigen::RowVectorXd mean = predictors.colwise().mean();
  Eigen::RowVectorXd sd = (predictors.rowwise() - mean).array().square().colwise().mean().sqrt();
  for (Eigen::Index k = 0; k < sd.size(); ++k)
    if (!(sd[k] > 0)) sd[k] = 1.0;
  const Eigen::Map<const Eigen::VectorXd> coef_v(coef.data(), 5);
  const Eigen::MatrixXd z = (predictors.rowwise() - mean).array().rowwise() / sd.array();
  Eigen::VectorXd score = z * coef_v;
  Rng nrng(derive_seed(config.seed, "noise"));
  for (Eigen::Index i = 0; i < score.size(); ++i) score[i] += wm.noise_sd * nrng.normal();

  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double m = (score.array() + mid).unaryExpr(&sigmoid).mean();
    (m < config.base_positive_rate ? lo : hi) = mid;
  }
  const double intercept = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < n; ++i)
    users[i].latent_willingness = sigmoid(intercept + score[static_cast<Eigen::Index>(i)]);
  return users;
}

OracleResponse behavior_oracle(const SyntheticUser& user, Timestamp dispatch_time, uint64_t seed) {
  Rng rng(derive_seed(derive_seed(seed, user.record.user_id), static_cast<uint64_t>(dispatch_time)));
  OracleResponse r;
  const double u = rng.uniform();
  r.retweeted = u < user.latent_willingness;
  const double wait = rng.exponential(user.latent_mean_wait);
  if (r.retweeted) r.wait = wait;
  return r;
}

LabeledDataset label_population(const std::vector<SyntheticUser>& users, Timestamp request_time,
                                uint64_t seed, std::string name) {
  LabeledDataset ds;
  ds.name = std::move(name);
  ds.entries.reserve(users.size());
  for (const auto& su : users) {
    const auto r = behavior_oracle(su, request_time, seed);
    ds.entries.push_back({su.record, r.retweeted ? Label::kRetweeter : Label::kNonRetweeter, request_time});
  }
  return ds;
}

std::string StrategySpec::label() const {
  switch (kind) {
    case Kind::kRandom: return "Random People Contact";
    case Kind::kPopular: return "Popular People Contact";
    case Kind::kPredicted: return "Our Prediction Approach";
    case Kind::kPredictedWaitTime: return "Our Prediction Approach + Wait-Time Model";
  }
  return "";
}

namespace {

std::string format_hours(double seconds) {
  std::ostringstream s;
  const double h = seconds / 3600.0;
  if (std::abs(h - std::round(h)) < 1e-9) s << static_cast<long long>(std::llround(h)) << "h";
  else s << seconds << "s";
  return s.str();
}

}  // namespace

std::string StrategySpec::to_string() const {
  switch (kind) {
    case Kind::kRandom: return "random";
    case Kind::kPopular: return "popular:" + std::to_string(popular_threshold);
    case Kind::kPredicted: return "predicted";
    case Kind::kPredictedWaitTime: {
      std::ostringstream s;
      s << "predicted_waittime:" << format_hours(deadline) << ":" << cutoff;
      return s.str();
    }
  }
  return "";
}

StrategySpec StrategySpec::parse(std::string_view text) {
  const auto parts = split(trim(text), ':');
  StrategySpec s;
  auto bad = [&] { throw Error("InvalidStrategy", std::string(text)); };
  const auto& head = parts[0];
  if (head == "random" && parts.size() == 1) {
    s.kind = Kind::kRandom;
  } else if (head == "popular" && parts.size() <= 2) {
    s.kind = Kind::kPopular;
    if (parts.size() == 2) {
      try {
        std::size_t used = 0;
        s.popular_threshold = std::stoll(parts[1], &used);
        if (used != parts[1].size() || s.popular_threshold < 0) bad();
      } catch (const std::logic_error&) {
        bad();
      }
    }
  } else if (head == "predicted" && parts.size() == 1) {
    s.kind = Kind::kPredicted;
  } else if (head == "predicted_waittime" && parts.size() <= 3) {
    s.kind = Kind::kPredictedWaitTime;
    if (parts.size() >= 2) s.deadline = parse_duration(parts[1]);
    if (parts.size() == 3) {
      try {
        std::size_t used = 0;
        s.cutoff = std::stod(parts[2], &used);
        if (used != parts[2].size() || !(s.cutoff >= 0 && s.cutoff <= 1)) bad();
      } catch (const std::logic_error&) {
        bad();
      }
    }
  } else {
    bad();
  }
  return s;
}

std::vector<StrategySpec> parse_strategies(std::string_view comma_separated) {
  std::vector<StrategySpec> out;
  for (const auto& part : split(comma_separated, ','))
    if (!trim(part).empty()) out.push_back(StrategySpec::parse(part));
  return out;
}

ScoredPopulation score_population(const std::vector<SyntheticUser>& users, const TrainedModel& model,
                                  const FeatureExtractor& extractor, Timestamp request_time) {
  ScoredPopulation pop;
  pop.users = &users;
  std::vector<WaitTimeModel> waits;
  waits.reserve(users.size());
  for (const auto& su : users) waits.push_back(fit_wait_time(su.record, kDefaultFallbackWait));
  const double fallback = population_fallback(waits);
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& u = users[i].record;
    if (waits[i].source == WaitSource::kPopulationFallback) waits[i].mean_wait = fallback;
    ScoredCandidate c;
    c.user_id = u.user_id;
    c.retweet_probability = predict_proba(model, extractor.assemble(u, request_time));
    c.followers_count = u.followers_count;
    c.mean_wait = waits[i].mean_wait;
    pop.candidates.push_back(std::move(c));
  }
  return pop;
}

StrategyResult run_strategy(const std::vector<SyntheticUser>& users, const StrategySpec& strategy,
                            const RunOptions& options, const ScoredPopulation* scored) {
  if (options.budget > users.size())
    throw Error("BudgetExceedsPopulation", "budget " + std::to_string(options.budget) + " > population " +
                                               std::to_string(users.size()));
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < users.size(); ++i) index.emplace(users[i].record.user_id, i);

  std::vector<std::size_t> chosen;
  using Kind = StrategySpec::Kind;
  switch (strategy.kind) {
    case Kind::kRandom: {
      std::vector<std::size_t> order(users.size());
      std::iota(order.begin(), order.end(), 0);
      Rng rng(options.selection_seed);
      for (std::size_t k = 0; k < options.budget; ++k)
        std::swap(order[k], order[k + rng.below(order.size() - k)]);
      chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(options.budget));
      break;
    }
    case Kind::kPopular: {
      for (std::size_t i = 0; i < users.size(); ++i)
        if (users[i].record.followers_count > strategy.popular_threshold) chosen.push_back(i);
      std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
        const auto fa = users[a].record.followers_count, fb = users[b].record.followers_count;
        return fa != fb ? fa > fb : users[a].record.user_id < users[b].record.user_id;
      });
      if (chosen.size() > options.budget) chosen.resize(options.budget);
      break;
    }
    case Kind::kPredicted:
    case Kind::kPredictedWaitTime: {
      if (!scored || scored->candidates.size() != users.size())
        throw Error("InvalidArgument", "predicted strategies need scored candidates");
      std::vector<ScoredCandidate> ranked;
      if (strategy.kind == Kind::kPredicted) {
        ranked = scored->candidates;
        std::sort(ranked.begin(), ranked.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
          if (a.retweet_probability != b.retweet_probability)
            return a.retweet_probability > b.retweet_probability;
          return a.user_id < b.user_id;
        });
        if (ranked.size() > options.budget) ranked.resize(options.budget);
      } else {
        ranked = rank_candidates(scored->candidates, strategy.deadline, strategy.cutoff, options.budget);
      }
      for (const auto& c : ranked) chosen.push_back(index.at(c.user_id));
      break;
    }
  }

  StrategyResult result;
  result.strategy = strategy;
  result.window = options.window;
  std::unordered_set<std::size_t> seen;
  for (auto i : chosen) {
    if (!seen.insert(i).second) continue;
    const auto& su = users[i];
    const auto r = behavior_oracle(su, options.request_time, options.oracle_seed);
    ContactOutcome o;
    o.user_id = su.record.user_id;
    o.dispatched_at = options.request_time;
    o.retweeted = r.retweeted;
    if (r.wait) o.retweet_at = options.request_time + static_cast<Timestamp>(std::llround(*r.wait));
    o.follower_ids = su.record.follower_ids;
    o.followers_count = su.record.followers_count;
    result.outcomes.push_back(std::move(o));
  }
  result.contacted = result.outcomes.size();
  if (!result.outcomes.empty()) {
    result.rate = retweeting_rate(result.outcomes);
    result.windowed_rate = retweeting_rate(result.outcomes, options.window);
    result.reach = unit_info_reach(result.outcomes);
  }
  return result;
}

std::string format_percent(double ratio) { return format_fixed(ratio * 100.0, 1) + "%"; }

ComparisonTable experiment_report(std::vector<StrategyResult> results) {
  if (results.size() < 2) throw Error("InvalidArgument", "a comparison needs at least two strategies");
  ComparisonTable t;
  t.window_label = format_hours(results.front().window);
  t.rows = std::move(results);
  return t;
}

std::string ComparisonTable::text() const {
  const std::string windowed = "Retweeting Rate within " + window_label;
  std::size_t label_width = std::string("Approach").size();
  for (const auto& r : rows) label_width = std::max(label_width, r.strategy.label().size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width) + 2) << "Approach" << std::right
      << std::setw(18) << "Retweeting Rate" << std::setw(static_cast<int>(windowed.size()) + 3) << windowed
      << std::setw(30) << "Unit-Info-Reach-Per-Person" << std::setw(12) << "Contacted" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(label_width) + 2) << r.strategy.label() << std::right
        << std::setw(18) << (r.rate ? format_percent(*r.rate) : "-")
        << std::setw(static_cast<int>(windowed.size()) + 3)
        << (r.windowed_rate ? format_percent(*r.windowed_rate) : "-") << std::setw(30)
        << (r.reach ? format_fixed(r.reach->value, 1) : "-") << std::setw(12) << r.contacted << '\n';
  }
  return out.str();
}

std::string ComparisonTable::csv() const {
  std::ostringstream out;
  out << "approach,strategy,contacted,retweeting_rate,windowed_rate,window_seconds,unit_info_reach,"
         "overlap_adjusted\n";
  for (const auto& r : rows) {
    out << '"' << r.strategy.label() << "\"," << r.strategy.to_string() << ',' << r.contacted << ','
        << (r.rate ? format_fixed(*r.rate, 4) : "") << ','
        << (r.windowed_rate ? format_fixed(*r.windowed_rate, 4) : "") << ',' << format_fixed(r.window, 0)
        << ',' << (r.reach ? format_fixed(r.reach->value, 3) : "") << ','
        << (r.reach ? (r.reach->overlap_adjusted ? "1" : "0") : "") << '\n';
  }
  return out.str();
}

ExperimentOptions::ExperimentOptions() {
  model_spec.kind = ModelKind::kRandomForest;
  model_spec.imbalance = {ImbalanceSetting::Kind::kWeighted, 30.0};
}

ExperimentResult run_experiment(const PopulationConfig& config, const ExperimentOptions& options,
                                const Lexicon& lexicon, const TraitMapping& mapping) {
  const auto users = generate_population(config);
  const auto ds = label_population(users, config.request_time, derive_seed(options.seed, "label"),
                                   "population");
  const auto [train_ds, test_ds] = stratified_split(ds, options.train_fraction, derive_seed(options.seed, "split"));
  FeatureExtractor extractor(lexicon, mapping);
  ModelSpec spec = options.model_spec;
  spec.seed = derive_seed(options.seed, "model");
  const auto model = train(spec, build_table(train_ds, extractor));
  const auto test_table = build_table(test_ds, extractor);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < users.size(); ++i) index.emplace(users[i].record.user_id, i);
  std::vector<SyntheticUser> held_out;
  for (const auto& e : test_ds.entries) held_out.push_back(users[index.at(e.user.user_id)]);

  ExperimentResult result;
  result.train_size = train_ds.size();
  result.test_size = test_ds.size();
  {
    const Eigen::VectorXd p = predict_proba(model, test_table);
    std::vector<ScoredLabel> s;
    for (Eigen::Index i = 0; i < p.size(); ++i) s.push_back({p[i], test_table.y[i]});
    result.test_auc = auc(s);
  }
  const auto scored = score_population(held_out, model, extractor, config.request_time);
  RunOptions run;
  run.budget = std::min(options.budget, held_out.size());
  run.request_time = config.request_time;
  run.oracle_seed = derive_seed(options.seed, "dispatch");
  run.selection_seed = derive_seed(options.seed, "select");
  run.window = options.window;
  std::vector<StrategyResult> rows;
  for (const auto& s : options.strategies) rows.push_back(run_strategy(held_out, s, run, &scored));
  result.table = experiment_report(std::move(rows));
  return result;
}

}  // namespace propagator
