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

#include "fixtures.h"
#include "propagator/corpus.h"

namespace propagator {
namespace {

using nlohmann::json;
using testing::kT0;

std::string line(const std::string& id, bool retweeter, const json& timeline = json::array()) {
  json j = {{"user_id", id},
            {"screen_name", "s" + id},
            {"created_at", kT0 - 86400 * 30},
            {"friends_count", 3},
            {"followers_count", 4},
            {"timeline", timeline},
            {"label", retweeter ? "retweeter" : "non_retweeter"},
            {"request_time", kT0}};
  return j.dump() + "\n";
}

using testing::error_code;

TEST(Corpus, LoadsThreeUsers) {
  const auto ds = parse_dataset(line("a", true) + line("b", false) + line("c", false), "t");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.count(Label::kRetweeter), 1u);
}

TEST(Corpus, DuplicateUserRejected) {
  EXPECT_EQ(error_code([] { parse_dataset(line("a", true) + line("a", false), "t"); }), "DuplicateUser");
}

TEST(Corpus, MalformedLinesRejected) {
  EXPECT_EQ(error_code([] { parse_dataset("{not json\n", "t"); }), "MalformedRecord");
  EXPECT_EQ(error_code([] { parse_dataset(R"({"user_id":"x"})" "\n", "t"); }), "MalformedRecord");
  EXPECT_EQ(error_code([] { parse_dataset("", "t"); }), "EmptyDataset");
}

TEST(Corpus, CountsRecomputedFromText) {
  const json tl = json::array({{{"ts", kT0 - 10}, {"text", "RT @a see #x http://t.co/1"}}});
  const auto ds = parse_dataset(line("a", true, tl), "t");
  const auto& m = ds.entries[0].user.timeline[0];
  EXPECT_EQ(m.mention_count, 1);
  EXPECT_EQ(m.hashtag_count, 1);
  EXPECT_EQ(m.url_count, 1);
  EXPECT_TRUE(m.is_retweet);
  EXPECT_EQ(m.original_author_id, "a");
}

TEST(Corpus, TimelineSortedAndTruncated) {
  json tl = json::array();
  for (int i = 0; i < 250; ++i) tl.push_back({{"ts", kT0 - 1000 - (i * 7919) % 250 * 60}, {"text", "x"}});
  // Distinct timestamps: i*7919 mod 250 is a permutation.
  const auto ds = parse_dataset(line("a", false, tl), "t");
  const auto& timeline = ds.entries[0].user.timeline;
  ASSERT_EQ(timeline.size(), kMaxTimelineLength);
  for (std::size_t i = 1; i < timeline.size(); ++i) EXPECT_LT(timeline[i - 1].timestamp, timeline[i].timestamp);
  EXPECT_EQ(timeline.back().timestamp, kT0 - 1000);
  EXPECT_EQ(timeline.front().timestamp, kT0 - 1000 - 199 * 60);
}

TEST(Corpus, JsonlRoundTrip) {
  auto u = testing::user("u1");
  u.description = "news junkie";
  u.has_url = true;
  u.statuses_count = 12;
  u.follower_ids = IdSet{"p1", "p2"};
  u.friend_ids = IdSet{"f1"};
  u.timeline = {testing::msg(kT0 - 500, "hello #x"), testing::retweet(kT0 - 100, "f1", kT0 - 400)};
  LabeledDataset ds{"d", {{u, Label::kRetweeter, kT0}}};
  const auto back = parse_dataset(dataset_to_jsonl(ds), "d");
  EXPECT_EQ(back, ds);
}

TEST(Corpus, ParsesUnlabeledUsers) {
  const auto users = parse_users(line("a", true) + line("b", false));
  ASSERT_EQ(users.size(), 2u);
  EXPECT_EQ(users[1].user_id, "b");
}

LabeledDataset synthetic(int positives, int total) {
  LabeledDataset ds;
  ds.name = "d";
  for (int i = 0; i < total; ++i)
    ds.entries.push_back({testing::user("u" + std::to_string(i)),
                          i < positives ? Label::kRetweeter : Label::kNonRetweeter, kT0});
  return ds;
}

TEST(StratifiedSplit, PublicSafetyCounts) {
  const auto [train, test] = stratified_split(synthetic(52, 1902), 2.0 / 3.0, 1);
  EXPECT_EQ(train.count(Label::kRetweeter), 35u);
  EXPECT_EQ(train.count(Label::kNonRetweeter), 1233u);
  EXPECT_EQ(test.count(Label::kRetweeter), 17u);
  EXPECT_EQ(test.count(Label::kNonRetweeter), 617u);
}

TEST(StratifiedSplit, BirdFluCounts) {
  const auto [train, test] = stratified_split(synthetic(155, 1859), 2.0 / 3.0, 1);
  EXPECT_EQ(train.count(Label::kRetweeter), 103u);
  EXPECT_EQ(train.count(Label::kNonRetweeter), 1136u);
  EXPECT_EQ(test.count(Label::kRetweeter), 52u);
  EXPECT_EQ(test.count(Label::kNonRetweeter), 568u);
}

TEST(StratifiedSplit, DeterministicDisjointCovering) {
  const auto ds = synthetic(30, 300);
  const auto a = stratified_split(ds, 0.5, 9);
  const auto b = stratified_split(ds, 0.5, 9);
  const auto c = stratified_split(ds, 0.5, 10);
  EXPECT_EQ(a.first, b.first);
  EXPECT_NE(a.first, c.first);
  std::set<std::string> ids;
  for (const auto* part : {&a.first, &a.second})
    for (const auto& e : part->entries) EXPECT_TRUE(ids.insert(e.user.user_id).second);
  EXPECT_EQ(ids.size(), 300u);
}

TEST(StratifiedSplit, Errors) {
  EXPECT_EQ(error_code([] { stratified_split(synthetic(0, 10), 0.5, 1); }), "SingleClass");
  EXPECT_EQ(error_code([] { stratified_split(synthetic(3, 10), 1.5, 1); }), "InvalidFraction");
  EXPECT_EQ(error_code([] { stratified_split(synthetic(3, 10), 0.0, 1); }), "InvalidFraction");
}

}  // namespace
}  // namespace propagator
