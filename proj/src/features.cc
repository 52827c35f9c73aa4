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

#include "propagator/features.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "propagator/util.h"

namespace propagator {

namespace {

constexpr std::array<const char*, 6> kFamilyNames = {"profile",  "social",     "personality",
                                                     "activity", "retweeting", "readiness"};

constexpr std::array<const char*, 5> kProfileNames = {
    "longevity_days", "screen_name_length", "has_description", "description_length", "has_url"};
constexpr std::array<const char*, 3> kSocialNames = {"friends_count", "followers_count",
                                                     "friends_followers_ratio"};
constexpr std::array<const char*, 9> kActivityNames = {
    "status_count",          "mentions_per_status",  "urls_per_status",
    "hashtags_per_status",   "statuses_per_day_lifetime", "statuses_per_day_30d",
    "mentions_per_day_30d",  "urls_per_day_30d",     "hashtags_per_day_30d"};
constexpr std::array<const char*, 3> kRetweetingNames = {"retweets_per_status", "retweets_per_day",
                                                         "stranger_retweet_fraction"};
constexpr std::array<const char*, 6> kReadinessNames = {
    "day_likelihood", "hour_likelihood", "day_entropy", "hour_entropy", "steadiness",
    "inactivity_seconds"};

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

template <std::size_t N>
double entropy(const std::array<double, N>& counts, double total) {
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

const char* family_name(Family f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

Family family_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i)
    if (name == kFamilyNames[i]) return static_cast<Family>(i);
  throw Error("UnknownFamily", std::string(name));
}

int utc_weekday(Timestamp t) {
  return static_cast<int>(((floor_div(t, kSecondsPerDay) + 4) % 7 + 7) % 7);
}

int utc_hour(Timestamp t) {
  const int64_t sec_of_day = t - floor_div(t, kSecondsPerDay) * kSecondsPerDay;
  return static_cast<int>(sec_of_day / kSecondsPerHour);
}

int FeatureManifest::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

std::size_t FeatureManifest::count(Family f) const {
  return static_cast<std::size_t>(std::count(families.begin(), families.end(), f));
}

nlohmann::json FeatureManifest::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < names.size(); ++i)
    features.push_back({{"name", names[i]}, {"family", family_name(families[i])}});
  return {{"manifest_version", kManifestVersion}, {"features", features}};
}

FeatureManifest FeatureManifest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("manifest_version").get<int>() != kManifestVersion)
      throw Error("VersionMismatch", "unsupported feature manifest version");
    FeatureManifest m;
    for (const auto& f : j.at("features")) {
      m.names.push_back(f.at("name").get<std::string>());
      m.families.push_back(family_from_name(f.at("family").get<std::string>()));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error("CorruptManifest", e.what());
  }
}

double FeatureVector::at(std::string_view name) const {
  const int i = manifest ? manifest->index_of(name) : -1;
  if (i < 0) throw Error("UnknownFeature", std::string(name));
  return values[i];
}

ProfileFeatures extract_profile(const UserRecord& user, Timestamp request_time) {
  if (request_time < user.created_at)
    throw Error("NegativeLongevity", "request precedes account creation for " + user.user_id);
  ProfileFeatures f;
  f << static_cast<double>(request_time - user.created_at) / kSecondsPerDay,
      static_cast<double>(utf8_length(user.screen_name)), user.description.empty() ? 0.0 : 1.0,
      static_cast<double>(utf8_length(user.description)), user.has_url ? 1.0 : 0.0;
  return f;
}

SocialFeatures extract_social(const UserRecord& user) {
  const auto friends = static_cast<double>(user.friends_count);
  const auto followers = static_cast<double>(user.followers_count);
  return SocialFeatures(friends, followers, friends / std::max(1.0, followers));
}

ActivityFeatures extract_activity(const UserRecord& user, Timestamp request_time) {
  ActivityFeatures f = ActivityFeatures::Zero();
  const auto& tl = user.timeline;
  const double n = static_cast<double>(tl.size());
  double mentions = 0, urls = 0, hashtags = 0;
  double recent = 0, recent_mentions = 0, recent_urls = 0, recent_hashtags = 0;
  const Timestamp window_start = request_time - kRecentWindowSeconds;
  for (const auto& m : tl) {
    mentions += m.mention_count;
    urls += m.url_count;
    hashtags += m.hashtag_count;
    if (m.timestamp > window_start && m.timestamp <= request_time) {
      recent += 1;
      recent_mentions += m.mention_count;
      recent_urls += m.url_count;
      recent_hashtags += m.hashtag_count;
    }
  }
  const double per_status = std::max(1.0, n);
  const double longevity_days =
      std::max(1.0, static_cast<double>(request_time - user.created_at) / kSecondsPerDay);
  const double posted = user.statuses_count ? static_cast<double>(*user.statuses_count) : n;
  constexpr double window_days = static_cast<double>(kRecentWindowSeconds) / kSecondsPerDay;
  f << n, mentions / per_status, urls / per_status, hashtags / per_status,
      posted / longevity_days, recent / window_days, recent_mentions / window_days,
      recent_urls / window_days, recent_hashtags / window_days;
  return f;
}

RetweetingFeatures extract_retweeting(const UserRecord& user) {
  const auto& tl = user.timeline;
  double retweets = 0, strangers = 0;
  for (const auto& m : tl) {
    if (!m.is_retweet) continue;
    retweets += 1;
    if (user.friend_ids && m.original_author_id && !user.friend_ids->contains(*m.original_author_id))
      strangers += 1;
  }
  if (retweets == 0) return RetweetingFeatures::Zero();
  const double span_days =
      std::max(1.0, static_cast<double>(tl.back().timestamp - tl.front().timestamp) / kSecondsPerDay);
  const double stranger_fraction = user.friend_ids ? strangers / retweets : 0.0;
  return RetweetingFeatures(retweets / std::max<double>(1.0, static_cast<double>(tl.size())),
                            retweets / span_days, stranger_fraction);
}

ReadinessFeatures extract_readiness(const UserRecord& user, Timestamp request_time) {
  ReadinessFeatures f = ReadinessFeatures::Zero();
  const auto& tl = user.timeline;
  if (tl.empty()) {
    f[5] = static_cast<double>(std::max<int64_t>(0, request_time - user.created_at));
    return f;
  }
  std::array<double, 7> days{};
  std::array<double, 24> hours{};
  for (const auto& m : tl) {
    days[static_cast<std::size_t>(utc_weekday(m.timestamp))] += 1;
    hours[static_cast<std::size_t>(utc_hour(m.timestamp))] += 1;
  }
  const double n = static_cast<double>(tl.size());
  f[0] = days[static_cast<std::size_t>(utc_weekday(request_time))] / n;
  f[1] = hours[static_cast<std::size_t>(utc_hour(request_time))] / n;
  f[2] = entropy(days, n);
  f[3] = entropy(hours, n);

  const std::size_t k = std::min<std::size_t>(tl.size(), kSteadinessWindow);
  if (k >= 2) {
    Eigen::VectorXd gaps(static_cast<Eigen::Index>(k - 1));
    const std::size_t first = tl.size() - k;
    for (std::size_t i = 0; i + 1 < k; ++i)
      gaps[static_cast<Eigen::Index>(i)] =
          static_cast<double>(tl[first + i + 1].timestamp - tl[first + i].timestamp);
    const double sigma = std::sqrt((gaps.array() - gaps.mean()).square().mean());
    f[4] = 1.0 / (sigma + kSteadinessEpsilon);
  }
  f[5] = static_cast<double>(std::max<int64_t>(0, request_time - tl.back().timestamp));
  return f;
}

Eigen::VectorXd extract_personality(const UserRecord& user, const Lexicon& lexicon,
                                    const TraitMapping& mapping) {
  std::string text;
  for (const auto& m : user.timeline) {
    text += m.text;
    text += '\n';
  }
  const auto scores = score_categories(tokenize(text), lexicon);
  const auto traits = derive_traits(scores, lexicon, mapping);
  const auto cats = scores.scores.size();
  Eigen::VectorXd out(cats + static_cast<Eigen::Index>(kTraitCount));
  out.head(cats) = scores.scores;
  for (std::size_t t = 0; t < kTraitCount; ++t) out[cats + static_cast<Eigen::Index>(t)] = traits[t];
  return out;
}

FeatureManifest build_manifest(const Lexicon& lexicon) {
  FeatureManifest m;
  auto add = [&](Family fam, const auto& names) {
    for (const auto& n : names) {
      m.names.emplace_back(n);
      m.families.push_back(fam);
    }
  };
  add(Family::kProfile, kProfileNames);
  add(Family::kSocial, kSocialNames);
  for (const auto& c : lexicon.categories()) {
    m.names.push_back("liwc_" + c.name);
    m.families.push_back(Family::kPersonality);
  }
  for (const auto& t : trait_names()) {
    m.names.push_back("trait_" + std::string(t));
    m.families.push_back(Family::kPersonality);
  }
  add(Family::kActivity, kActivityNames);
  add(Family::kRetweeting, kRetweetingNames);
  add(Family::kReadiness, kReadinessNames);
  return m;
}

FeatureExtractor::FeatureExtractor(const Lexicon& lexicon, const TraitMapping& mapping)
    : lexicon_(&lexicon),
      mapping_(&mapping),
      manifest_(std::make_shared<const FeatureManifest>(build_manifest(lexicon))) {}

FeatureVector FeatureExtractor::assemble(const UserRecord& user, Timestamp request_time) const {
  const auto personality = extract_personality(user, *lexicon_, *mapping_);
  FeatureVector fv;
  fv.user_id = user.user_id;
  fv.request_time = request_time;
  fv.manifest = manifest_;
  fv.values.resize(static_cast<Eigen::Index>(manifest_->size()));
  fv.values << extract_profile(user, request_time), extract_social(user), personality,
      extract_activity(user, request_time), extract_retweeting(user),
      extract_readiness(user, request_time);
  for (Eigen::Index i = 0; i < fv.values.size(); ++i)
    if (!std::isfinite(fv.values[i]))
      throw Error("NonFiniteFeature", manifest_->names[static_cast<std::size_t>(i)] + " for " +
                                          user.user_id);
  return fv;
}

FeatureVector assemble(const UserRecord& user, Timestamp request_time, const Lexicon& lexicon,
                       const TraitMapping& mapping) {
  return FeatureExtractor(lexicon, mapping).assemble(user, request_time);
}

FeatureTable build_table(const LabeledDataset& ds, const FeatureExtractor& extractor) {
  FeatureTable t;
  t.name = ds.name;
  t.feature_names = extractor.manifest()->names;
  const auto n = static_cast<Eigen::Index>(ds.size());
  t.x.resize(n, static_cast<Eigen::Index>(t.feature_names.size()));
  t.y.resize(n);
  t.weights = Eigen::VectorXd::Ones(n);
  t.ids.reserve(ds.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = ds.entries[static_cast<std::size_t>(i)];
    t.x.row(i) = extractor.assemble(e.user, e.request_time).values.transpose();
    t.y[i] = e.label == Label::kRetweeter ? 1 : 0;
    t.ids.push_back(e.user.user_id);
    t.latest_request_time = std::max(t.latest_request_time, e.request_time);
  }
  return t;
}

}  // namespace propagator
