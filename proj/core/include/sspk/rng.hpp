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

#ifndef SSPK_RNG_HPP_
#define SSPK_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace sspk {

// Deterministic random source. mt19937_64's output sequence is pinned by the
// standard, but the standard *distributions* are not, so the transforms here
// are spelled out explicitly: fixed seeds give bit-identical streams on any
// platform. Stateless per call (the Box-Muller normal discards its sibling),
// so the stream position depends only on the call count.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] inclusive, unbiased via rejection.
  int64_t uniform_int(int64_t lo, int64_t hi);
  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev);

  void fill_uniform(std::span<float> out, float lo, float hi);
  void fill_normal(std::span<float> out, float mean, float stddev);

  // mt19937_64 engine state round-trip (textual, used by checkpoints).
  std::string state_string() const;
  void restore_state(const std::string& s);

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

// Derives a stream seed from a root seed and a purpose label, so independent
// consumers (parameter init per tensor, sampler, corpus synthesis) never
// share or shift each other's streams.
uint64_t derive_seed(uint64_t root_seed, const std::string& stream_name);

}  // namespace sspk

#endif  // SSPK_RNG_HPP_
