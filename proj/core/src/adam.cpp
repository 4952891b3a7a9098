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

#include "sspk/adam.hpp"

#include <cmath>
#include <string>

#include "sspk/error.hpp"

namespace sspk {

void Adam::init_like(const std::vector<Tensor*>& params) {
  m_.clear();
  v_.clear();
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor* p : params) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
  steps_ = 0;
}

void Adam::step(const std::vector<Tensor*>& params,
                const std::vector<const Tensor*>& grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw NumericError("adam: expected " + std::to_string(m_.size()) +
                       " parameters, got " + std::to_string(params.size()) +
                       " with " + std::to_string(grads.size()) + " gradients");
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));

  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    if (!p.same_shape(m))
      throw NumericError("adam: parameter " + std::to_string(i) + " shape " +
                         p.shape_string() + " does not match moment shape " +
                         m.shape_string());
    const float* g = grads[i] ? grads[i]->data() : nullptr;
    if (g && !grads[i]->same_shape(p))
      throw NumericError("adam: gradient " + std::to_string(i) + " shape " +
                         grads[i]->shape_string() + " does not match parameter " +
                         p.shape_string());

    float* pd = p.data();
    float* md = m.data();
    float* vd = v.data();
    for (int64_t j = 0; j < p.size(); ++j) {
      const double gj = g ? static_cast<double>(g[j]) : 0.0;
      const double mj = beta1_ * md[j] + (1.0 - beta1_) * gj;
      const double vj = beta2_ * vd[j] + (1.0 - beta2_) * gj * gj;
      md[j] = static_cast<float>(mj);
      vd[j] = static_cast<float>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      pd[j] = static_cast<float>(pd[j] - lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

}  // namespace sspk
