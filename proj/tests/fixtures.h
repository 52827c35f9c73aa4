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

#ifndef PROPAGATOR_TESTS_FIXTURES_H_
#define PROPAGATOR_TESTS_FIXTURES_H_

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "propagator/corpus.h"
#include "propagator/features.h"
#include "propagator/util.h"

namespace propagator::testing {

// 2012-07-01 00:00:00 UTC, a Sunday.
inline constexpr Timestamp kT0 = 1341100800;

inline Message msg(Timestamp ts, std::string text = "hello world") {
  Message m;
  m.timestamp = ts;
  m.text = std::move(text);
  const auto c = count_entities(m.text);
  m.mention_count = c.mentions;
  m.url_count = c.urls;
  m.hashtag_count = c.hashtags;
  return m;
}

inline Message retweet(Timestamp ts, std::string author, Timestamp original) {
  Message m = msg(ts, "RT @" + author + ": something");
  m.is_retweet = true;
  m.original_author_id = std::move(author);
  m.original_timestamp = original;
  return m;
}

inline UserRecord user(std::string id, Timestamp created = kT0 - 100 * kSecondsPerDay) {
  UserRecord u;
  u.user_id = std::move(id);
  u.screen_name = "name_" + u.user_id;
  u.created_at = created;
  return u;
}

inline FeatureTable make_table(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) {
  FeatureTable t;
  t.name = "t";
  t.x = x;
  t.y = y;
  t.weights = Eigen::VectorXd::Ones(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) t.feature_names.push_back("f" + std::to_string(c));
  for (Eigen::Index r = 0; r < x.rows(); ++r) t.ids.push_back("u" + std::to_string(r));
  return t;
}

template <typename F>
std::string error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("propagator_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace propagator::testing

#endif  // PROPAGATOR_TESTS_FIXTURES_H_
