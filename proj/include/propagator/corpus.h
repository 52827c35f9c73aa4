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

#ifndef PROPAGATOR_CORPUS_H_
#define PROPAGATOR_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace propagator {

using Timestamp = int64_t;  // epoch seconds, UTC
using IdSet = std::set<std::string>;

inline constexpr std::size_t kMaxTimelineLength = 200;

struct Message {
  Timestamp timestamp = 0;
  std::string text;
  bool is_retweet = false;
  std::optional<std::string> original_author_id;
  std::optional<Timestamp> original_timestamp;
  int mention_count = 0;
  int url_count = 0;
  int hashtag_count = 0;

  bool operator==(const Message&) const = default;
};

struct UserRecord {
  std::string user_id;
  std::string screen_name;
  Timestamp created_at = 0;
  std::string description;
  bool has_url = false;
  int64_t friends_count = 0;
  int64_t followers_count = 0;
  // Lifetime number of posted statuses when the source provides it.
  std::optional<int64_t> statuses_count;
  std::optional<IdSet> follower_ids;
  std::optional<IdSet> friend_ids;
  std::vector<Message> timeline;  // ascending by timestamp

  bool operator==(const UserRecord&) const = default;
};

enum class Label { kNonRetweeter = 0, kRetweeter = 1 };

const char* label_name(Label label);

struct LabeledEntry {
  UserRecord user;
  Label label = Label::kNonRetweeter;
  Timestamp request_time = 0;

  bool operator==(const LabeledEntry&) const = default;
};

struct LabeledDataset {
  std::string name;
  std::vector<LabeledEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t count(Label label) const;

  bool operator==(const LabeledDataset&) const = default;
};

struct MessageCounts {
  int mentions = 0;
  int urls = 0;
  int hashtags = 0;
};

// Token-prefix counting: "@" mention, "#" hashtag, "http" URL.
MessageCounts count_entities(std::string_view text);

// Sorts the timeline, keeps the most recent kMaxTimelineLength messages
// and checks the record invariants. Throws MalformedRecord.
void normalize_user(UserRecord& user);

// JSONL codec. Unlabeled records (candidate streams) use the same schema.
UserRecord user_from_json(const nlohmann::json& j);
nlohmann::json user_to_json(const UserRecord& user);
LabeledEntry entry_from_json(const nlohmann::json& j);
nlohmann::json entry_to_json(const LabeledEntry& entry);

LabeledDataset parse_dataset(std::string_view jsonl, std::string name);
LabeledDataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_jsonl(const LabeledDataset& ds);
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);

std::vector<UserRecord> parse_users(std::string_view jsonl);
std::vector<UserRecord> load_users(const std::filesystem::path& path);

// Per-class shuffle with round-half-up train counts. Both halves keep the
// parent's entry order.
std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                           double train_fraction,
                                                           uint64_t seed);

}  // namespace propagator

#endif  // PROPAGATOR_CORPUS_H_
