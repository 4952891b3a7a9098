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

#include "sspk/tape.hpp"

#include <limits>
#include <utility>

#include "sspk/error.hpp"

namespace sspk {

Var Tape::leaf(Tensor value, bool needs_grad) {
  if (slots_.size() >= static_cast<size_t>(std::numeric_limits<int32_t>::max()))
    throw NumericError("tape slot count overflow");
  Slot s;
  s.value = std::move(value);
  s.needs_grad = needs_grad;
  s.is_leaf = true;
  slots_.push_back(std::move(s));
  return Var{static_cast<int32_t>(slots_.size() - 1)};
}

Var Tape::emit(Tensor value, bool needs_grad,
               std::function<void(Tape&, Var)> backward_fn) {
  if (slots_.size() >= static_cast<size_t>(std::numeric_limits<int32_t>::max()))
    throw NumericError("tape slot count overflow");
  Slot s;
  s.value = std::move(value);
  s.needs_grad = needs_grad;
  slots_.push_back(std::move(s));
  Var out{static_cast<int32_t>(slots_.size() - 1)};
  if (needs_grad) nodes_.push_back(Node{out.id, std::move(backward_fn)});
  return out;
}

Tensor& Tape::grad(Var v) {
  Slot& s = slots_[static_cast<size_t>(v.id)];
  if (s.grad.size() == 0) s.grad = Tensor(s.value.shape());
  return s.grad;
}

const Tensor* Tape::grad_if(Var v) const {
  const Slot& s = slots_[static_cast<size_t>(v.id)];
  return s.grad.size() > 0 ? &s.grad : nullptr;
}

void Tape::backward(Var root, bool release_buffers) {
  if (backward_done_) throw NumericError("tape backward invoked twice");
  backward_done_ = true;
  if (!root.valid() || static_cast<size_t>(root.id) >= slots_.size())
    throw NumericError("backward root is not on this tape");
  Slot& rs = slots_[static_cast<size_t>(root.id)];
  if (rs.value.size() != 1)
    throw NumericError("backward root must be scalar, got shape " +
                       rs.value.shape_string());
  if (!rs.needs_grad)
    throw NumericError("backward root does not require gradients");
  grad(root)[0] = 1.0f;

  for (size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    Slot& out = slots_[static_cast<size_t>(node.out)];
    // Untouched output gradient means zero upstream signal; skip the node.
    if (out.grad.size() > 0) node.backward_fn(*this, Var{node.out});
    node.backward_fn = nullptr;
    if (release_buffers && !out.is_leaf) {
      out.value.release();
      out.grad.release();
    }
  }
}

}  // namespace sspk
