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

#ifndef SSPK_ADAM_HPP_
#define SSPK_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "sspk/tensor.hpp"

namespace sspk {

// Adam optimizer with bias correction. One shared step counter; first and
// second moments are kept per parameter in the same order as init_like().
// A null gradient entry means an exactly-zero gradient: moments stay at
// whatever decay leaves them, and a parameter whose moments never left zero
// is not modified at all.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void init_like(const std::vector<Tensor*>& params);

  // Applies one update to every parameter: grads[i] == nullptr reads as zero.
  void step(const std::vector<Tensor*>& params,
            const std::vector<const Tensor*>& grads, double lr);

  int64_t steps() const { return steps_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }

  // Serialization accessors; moments are stored flat in parameter order.
  std::vector<Tensor>& moments_m() { return m_; }
  std::vector<Tensor>& moments_v() { return v_; }
  const std::vector<Tensor>& moments_m() const { return m_; }
  const std::vector<Tensor>& moments_v() const { return v_; }
  void set_steps(int64_t steps) { steps_ = steps; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  int64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace sspk

#endif  // SSPK_ADAM_HPP_
