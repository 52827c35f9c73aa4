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

#ifndef PROPAGATOR_UTIL_H_
#define PROPAGATOR_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace propagator {

// All recoverable failures surface as Error; code() carries the stable
// error name (e.g. "DuplicateUser") that the CLI and HTTP layer report.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

inline constexpr int64_t kSecondsPerDay = 86400;
inline constexpr int64_t kSecondsPerHour = 3600;

// Portable PRNG. The standard distributions are implementation-defined, so
// every draw used for a reproducible artifact goes through this class.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);
  double normal();
  double exponential(double mean);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  uint64_t s_[4];
};

uint64_t splitmix64(uint64_t x);
// Stable combination of a seed with a stream index or a string key.
uint64_t derive_seed(uint64_t seed, uint64_t stream);
uint64_t derive_seed(uint64_t seed, std::string_view key);

uint64_t fnv1a64(std::string_view data);
std::string hex64(uint64_t v);

std::string read_file(const std::filesystem::path& path);
// Writes to a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// "90", "90s", "15m", "24h", "2d" -> seconds.
double parse_duration(std::string_view text);

std::string format_fixed(double value, int decimals);
std::string to_lower_ascii(std::string_view s);
// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace propagator

#endif  // PROPAGATOR_UTIL_H_
