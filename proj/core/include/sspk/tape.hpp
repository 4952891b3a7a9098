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

#ifndef SSPK_TAPE_HPP_
#define SSPK_TAPE_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "sspk/tensor.hpp"

namespace sspk {

// Handle to a value recorded on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode differentiation tape. A forward pass records one node per
// primitive operation; backward() replays the nodes in exact reverse order,
// accumulating gradients additively at fan-out points. Single-threaded by
// design; one backward pass per tape.
//
// Slots hold the forward values and (lazily allocated) gradients. Ops whose
// inputs all carry needs_grad == false produce plain slots with no node, so
// constant subgraphs (one-hot phone matrices, decode targets) cost no
// backward work and no gradient storage.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers an input. Parameters pass needs_grad = true; plain data false.
  Var leaf(Tensor value, bool needs_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Registers an op output plus its backward closure. At backward time the
  // closure receives the tape and the output's own Var (for reading the
  // upstream gradient); it runs only if that gradient was ever touched by a
  // downstream node.
  Var emit(Tensor value, bool needs_grad,
           std::function<void(Tape&, Var)> backward_fn);

  const Tensor& val(Var v) const { return slots_[static_cast<size_t>(v.id)].value; }
  bool needs_grad(Var v) const { return slots_[static_cast<size_t>(v.id)].needs_grad; }
  bool has_grad(Var v) const { return slots_[static_cast<size_t>(v.id)].grad.size() > 0; }

  // Gradient buffer, zero-allocated on first access. Call only for vars with
  // needs_grad.
  Tensor& grad(Var v);
  // Read-only view; null when the gradient was never touched (i.e. zero).
  const Tensor* grad_if(Var v) const;

  // Seeds d(root)/d(root) = 1 (root must be scalar) and runs all recorded
  // nodes in reverse. With release_buffers (default), each node's output
  // value and gradient are freed right after its backward step, which keeps
  // the peak footprint near the forward-values size; leaf slots (parameters,
  // data) are always preserved.
  void backward(Var root, bool release_buffers = true);

  size_t num_slots() const { return slots_.size(); }
  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Slot {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool is_leaf = false;
  };
  struct Node {
    int32_t out;
    std::function<void(Tape&, Var)> backward_fn;
  };

  std::vector<Slot> slots_;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace sspk

#endif  // SSPK_TAPE_HPP_
