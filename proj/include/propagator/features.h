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

#ifndef PROPAGATOR_FEATURES_H_
#define PROPAGATOR_FEATURES_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "propagator/corpus.h"
#include "propagator/personality.h"
#include "propagator/util.h"

namespace propagator {

enum class Family { kProfile, kSocial, kPersonality, kActivity, kRetweeting, kReadiness };

const char* family_name(Family f);
Family family_from_name(std::string_view name);

inline constexpr int kManifestVersion = 1;
inline constexpr int kSteadinessWindow = 20;  // most recent K messages
inline constexpr double kSteadinessEpsilon = 1.0;  // seconds
inline constexpr int64_t kRecentWindowSeconds = 30 * kSecondsPerDay;

// Ordered feature names shared by extractors, model files and the service.
struct FeatureManifest {
  std::vector<std::string> names;
  std::vector<Family> families;

  std::size_t size() const { return names.size(); }
  int index_of(std::string_view name) const;
  std::size_t count(Family f) const;

  nlohmann::json to_json() const;
  static FeatureManifest from_json(const nlohmann::json& j);

  bool operator==(const FeatureManifest&) const = default;
};

struct FeatureVector {
  std::string user_id;
  Timestamp request_time = 0;
  Eigen::VectorXd values;
  std::shared_ptr<const FeatureManifest> manifest;

  // Throws UnknownFeature.
  double at(std::string_view name) const;
};

using ProfileFeatures = Eigen::Matrix<double, 5, 1>;
using SocialFeatures = Eigen::Matrix<double, 3, 1>;
using ActivityFeatures = Eigen::Matrix<double, 9, 1>;
using RetweetingFeatures = Eigen::Matrix<double, 3, 1>;
using ReadinessFeatures = Eigen::Matrix<double, 6, 1>;

// (longevity_days, screen_name_length, has_description, description_length,
//  has_url). Throws NegativeLongevity.
ProfileFeatures extract_profile(const UserRecord& user, Timestamp request_time);

// (friends, followers, friends / max(1, followers))
SocialFeatures extract_social(const UserRecord& user);

// (status_count, mentions/urls/hashtags per status, statuses per day over the
//  account life, statuses/mentions/urls/hashtags per day over the last 30 days)
ActivityFeatures extract_activity(const UserRecord& user, Timestamp request_time);

// (retweets per status, retweets per day over the timeline span, fraction of
//  retweets whose source is outside friend_ids)
RetweetingFeatures extract_retweeting(const UserRecord& user);

// (day likelihood, hour likelihood, day entropy, hour entropy, steadiness,
//  inactivity seconds). Buckets are UTC; entropies in nats.
ReadinessFeatures extract_readiness(const UserRecord& user, Timestamp request_time);

// Category scores followed by the 35 traits, over all timeline text.
Eigen::VectorXd extract_personality(const UserRecord& user, const Lexicon& lexicon,
                                    const TraitMapping& mapping);

// 0 = Sunday.
int utc_weekday(Timestamp t);
int utc_hour(Timestamp t);

class FeatureExtractor {
 public:
  FeatureExtractor(const Lexicon& lexicon, const TraitMapping& mapping);

  const std::shared_ptr<const FeatureManifest>& manifest() const { return manifest_; }
  FeatureVector assemble(const UserRecord& user, Timestamp request_time) const;

 private:
  const Lexicon* lexicon_;
  const TraitMapping* mapping_;
  std::shared_ptr<const FeatureManifest> manifest_;
};

FeatureManifest build_manifest(const Lexicon& lexicon);

FeatureVector assemble(const UserRecord& user, Timestamp request_time, const Lexicon& lexicon,
                       const TraitMapping& mapping);

// Labeled feature matrix. Row i describes ids[i]; y is 1 for retweeters.
struct FeatureTable {
  std::string name;
  std::vector<std::string> feature_names;
  std::vector<std::string> ids;
  Eigen::MatrixXd x;
  Eigen::VectorXi y;
  Eigen::VectorXd weights;
  Timestamp latest_request_time = 0;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
  Eigen::Index count(int label) const { return (y.array() == label).count(); }
};

FeatureTable build_table(const LabeledDataset& ds, const FeatureExtractor& extractor);

}  // namespace propagator

#endif  // PROPAGATOR_FEATURES_H_
