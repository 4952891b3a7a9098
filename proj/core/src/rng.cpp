// Copyright 2026 The sspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sspk/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sspk/error.hpp"

namespace sspk {

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (lo > hi) throw NumericError("uniform_int: empty range");
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(gen_());  // full 64-bit range
  uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return lo + static_cast<int64_t>(x % span);
}

double Rng::normal() {
  // One value per call, two raw draws; u1 clamped away from 0 so log stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

void Rng::fill_uniform(std::span<float> out, float lo, float hi) {
  for (float& v : out) v = static_cast<float>(uniform(lo, hi));
}

void Rng::fill_normal(std::span<float> out, float mean, float stddev) {
  for (float& v : out) v = static_cast<float>(normal(mean, stddev));
}

std::string Rng::state_string() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::restore_state(const std::string& s) {
  std::istringstream is(s);
  is >> gen_;
  if (!is) throw DataError("rng: malformed engine state string");
}

uint64_t derive_seed(uint64_t root_seed, const std::string& stream_name) {
  // FNV-1a over the name, then splitmix64 finalization mixing in the root.
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : stream_name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  uint64_t z = h ^ (root_seed + 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace sspk
