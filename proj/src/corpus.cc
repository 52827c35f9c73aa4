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

#include "propagator/corpus.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "propagator/util.h"

namespace propagator {

using nlohmann::json;

const char* label_name(Label label) {
  return label == Label::kRetweeter ? "retweeter" : "non_retweeter";
}

std::size_t LabeledDataset::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [&](const LabeledEntry& e) { return e.label == label; }));
}

MessageCounts count_entities(std::string_view text) {
  MessageCounts c;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view tok = text.substr(i, j - i);
    if (tok.size() > 1 && tok[0] == '@') ++c.mentions;
    else if (tok.size() > 1 && tok[0] == '#') ++c.hashtags;
    else if (tok.starts_with("http")) ++c.urls;
    i = j;
  }
  return c;
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error("MalformedRecord", what); }

// "RT @handle: ..." -> "handle"
std::optional<std::string> retweet_source(std::string_view text) {
  if (!text.starts_with("RT @")) return std::nullopt;
  std::size_t end = 4;
  while (end < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[end]);
    if (!(std::isalnum(c) || c == '_')) break;
    ++end;
  }
  if (end == 4) return std::nullopt;
  return std::string(text.substr(4, end - 4));
}

template <typename T>
T get_required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing key '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    malformed(std::string("bad type for '") + key + "'");
  }
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    malformed(std::string("bad type for '") + key + "'");
  }
}

std::optional<IdSet> get_id_set(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) malformed(std::string("'") + key + "' must be an array");
  IdSet ids;
  for (const auto& v : *it) {
    if (v.is_string()) ids.insert(v.get<std::string>());
    else if (v.is_number_integer()) ids.insert(std::to_string(v.get<int64_t>()));
    else malformed(std::string("bad id in '") + key + "'");
  }
  return ids;
}

Message message_from_json(const json& j) {
  if (!j.is_object()) malformed("timeline entry must be an object");
  Message m;
  m.timestamp = get_required<int64_t>(j, "ts");
  m.text = get_optional<std::string>(j, "text").value_or("");
  auto flag = get_optional<bool>(j, "is_retweet");
  m.is_retweet = flag ? *flag : m.text.starts_with("RT @");
  m.original_author_id = get_optional<std::string>(j, "original_author_id");
  m.original_timestamp = get_optional<int64_t>(j, "original_ts");
  if (m.is_retweet && !m.original_author_id) {
    m.original_author_id = retweet_source(m.text);
    if (!m.original_author_id) malformed("retweet without original_author_id");
  }
  if (m.original_timestamp && *m.original_timestamp > m.timestamp) {
    log_warning("original_ts after retweet time (clock skew); dropped");
    m.original_timestamp.reset();
  }
  const auto counted = count_entities(m.text);
  m.mention_count = get_optional<int>(j, "mention_count").value_or(counted.mentions);
  m.url_count = get_optional<int>(j, "url_count").value_or(counted.urls);
  m.hashtag_count = get_optional<int>(j, "hashtag_count").value_or(counted.hashtags);
  if (m.mention_count < 0 || m.url_count < 0 || m.hashtag_count < 0)
    malformed("negative entity count");
  return m;
}

json message_to_json(const Message& m) {
  json j = {{"ts", m.timestamp},
            {"text", m.text},
            {"is_retweet", m.is_retweet},
            {"mention_count", m.mention_count},
            {"url_count", m.url_count},
            {"hashtag_count", m.hashtag_count}};
  if (m.original_author_id) j["original_author_id"] = *m.original_author_id;
  if (m.original_timestamp) j["original_ts"] = *m.original_timestamp;
  return j;
}

Label label_from_json(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "retweeter") return Label::kRetweeter;
    if (s == "non_retweeter") return Label::kNonRetweeter;
  } else if (v.is_boolean()) {
    return v.get<bool>() ? Label::kRetweeter : Label::kNonRetweeter;
  } else if (v.is_number_integer()) {
    const auto i = v.get<int64_t>();
    if (i == 0 || i == 1) return i ? Label::kRetweeter : Label::kNonRetweeter;
  }
  malformed("label must be 'retweeter' or 'non_retweeter'");
}

}  // namespace

void normalize_user(UserRecord& user) {
  if (user.user_id.empty()) malformed("empty user_id");
  if (user.friends_count < 0 || user.followers_count < 0) malformed("negative social count");
  if (user.statuses_count && *user.statuses_count < 0) malformed("negative statuses_count");
  std::stable_sort(user.timeline.begin(), user.timeline.end(),
                   [](const Message& a, const Message& b) { return a.timestamp < b.timestamp; });
  if (user.timeline.size() > kMaxTimelineLength) {
    user.timeline.erase(user.timeline.begin(),
                        user.timeline.end() - static_cast<std::ptrdiff_t>(kMaxTimelineLength));
  }
}

UserRecord user_from_json(const json& j) {
  if (!j.is_object()) malformed("record must be a JSON object");
  UserRecord u;
  u.user_id = get_required<std::string>(j, "user_id");
  u.screen_name = get_optional<std::string>(j, "screen_name").value_or("");
  u.created_at = get_required<int64_t>(j, "created_at");
  u.description = get_optional<std::string>(j, "description").value_or("");
  u.has_url = get_optional<bool>(j, "has_url").value_or(false);
  u.friends_count = get_required<int64_t>(j, "friends_count");
  u.followers_count = get_required<int64_t>(j, "followers_count");
  u.statuses_count = get_optional<int64_t>(j, "statuses_count");
  u.follower_ids = get_id_set(j, "follower_ids");
  u.friend_ids = get_id_set(j, "friend_ids");
  auto tl = j.find("timeline");
  if (tl != j.end() && !tl->is_null()) {
    if (!tl->is_array()) malformed("timeline must be an array");
    u.timeline.reserve(tl->size());
    for (const auto& m : *tl) u.timeline.push_back(message_from_json(m));
  }
  normalize_user(u);
  return u;
}

json user_to_json(const UserRecord& u) {
  json j = {{"user_id", u.user_id},
            {"screen_name", u.screen_name},
            {"created_at", u.created_at},
            {"description", u.description},
            {"has_url", u.has_url},
            {"friends_count", u.friends_count},
            {"followers_count", u.followers_count}};
  if (u.statuses_count) j["statuses_count"] = *u.statuses_count;
  if (u.follower_ids) j["follower_ids"] = *u.follower_ids;
  if (u.friend_ids) j["friend_ids"] = *u.friend_ids;
  json tl = json::array();
  for (const auto& m : u.timeline) tl.push_back(message_to_json(m));
  j["timeline"] = std::move(tl);
  return j;
}

LabeledEntry entry_from_json(const json& j) {
  LabeledEntry e;
  e.user = user_from_json(j);
  auto label = j.find("label");
  if (label == j.end() || label->is_null()) malformed("missing key 'label'");
  e.label = label_from_json(*label);
  auto rt = get_optional<int64_t>(j, "request_time");
  if (rt) {
    e.request_time = *rt;
  } else {
    e.request_time = e.user.created_at;
    if (!e.user.timeline.empty())
      e.request_time = std::max(e.request_time, e.user.timeline.back().timestamp);
  }
  if (e.request_time <= 0) malformed("request_time must be positive");
  return e;
}

json entry_to_json(const LabeledEntry& e) {
  json j = user_to_json(e.user);
  j["label"] = label_name(e.label);
  j["request_time"] = e.request_time;
  return j;
}

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = trim(text.substr(start, end - start));
    if (!line.empty()) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error("MalformedRecord", "line " + std::to_string(line_no) + ": invalid JSON");
      }
      try {
        fn(j, line_no);
      } catch (const Error& e) {
        if (e.code() != "MalformedRecord") throw;
        throw Error("MalformedRecord", "line " + std::to_string(line_no) + ": " +
                                           std::string(e.what()).substr(e.code().size() + 2));
      }
    }
    start = end + 1;
  }
}

}  // namespace

LabeledDataset parse_dataset(std::string_view jsonl, std::string name) {
  LabeledDataset ds;
  ds.name = std::move(name);
  std::unordered_set<std::string> seen;
  for_each_line(jsonl, [&](const json& j, std::size_t) {
    auto e = entry_from_json(j);
    if (!seen.insert(e.user.user_id).second) throw Error("DuplicateUser", e.user.user_id);
    ds.entries.push_back(std::move(e));
  });
  if (ds.entries.empty()) throw Error("EmptyDataset", "no records in " + ds.name);
  return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path), path.stem().string());
}

std::string dataset_to_jsonl(const LabeledDataset& ds) {
  std::string out;
  for (const auto& e : ds.entries) {
    out += entry_to_json(e).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_jsonl(ds));
}

std::vector<UserRecord> parse_users(std::string_view jsonl) {
  std::vector<UserRecord> users;
  for_each_line(jsonl, [&](const json& j, std::size_t) { users.push_back(user_from_json(j)); });
  return users;
}

std::vector<UserRecord> load_users(const std::filesystem::path& path) {
  return parse_users(read_file(path));
}

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                           double train_fraction,
                                                           uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("InvalidFraction", "train_fraction must lie in (0, 1)");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < ds.entries.size(); ++i)
    by_class[static_cast<int>(ds.entries[i].label)].push_back(i);
  if (by_class[0].empty() || by_class[1].empty())
    throw Error("SingleClass", "dataset " + ds.name + " has a single class");

  std::vector<bool> in_train(ds.entries.size(), false);
  Rng rng(seed);
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.below(i)]);
    // Round half up: ties go to the training set.
    const auto take = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) * train_fraction + 0.5));
    for (std::size_t k = 0; k < take && k < members.size(); ++k) in_train[members[k]] = true;
  }

  LabeledDataset train{ds.name + "/train", {}};
  LabeledDataset test{ds.name + "/test", {}};
  for (std::size_t i = 0; i < ds.entries.size(); ++i)
    (in_train[i] ? train : test).entries.push_back(ds.entries[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace propagator
