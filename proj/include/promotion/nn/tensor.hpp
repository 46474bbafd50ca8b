/* Copyright 2026 The Promotion Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROMOTION_NN_TENSOR_HPP_
#define PROMOTION_NN_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "promotion/error.hpp"

namespace promotion::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

// Dense float64 array that records the operation producing it, so that a
// scalar result can be differentiated in reverse mode. Data is fixed after
// construction except for leaf parameters updated by an optimizer; gradient
// buffers are owned by whichever backward pass is running.
class Tensor {
 public:
  struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into parents' grads.
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad() {
      if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
      return grad;
    }
  };

  Tensor() = default;

  static Tensor zeros(Shape shape) {
    std::vector<double> d(numel(shape), 0.0);
    return Tensor(std::move(shape), std::move(d));
  }
  static Tensor full(Shape shape, double value) {
    std::vector<double> d(numel(shape), value);
    return Tensor(std::move(shape), std::move(d));
  }
  static Tensor scalar(double value) { return Tensor({}, {value}); }

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    if (numel(shape) != data.size())
      throw ShapeError("Tensor: data length " + std::to_string(data.size()) +
                       " does not match shape " + to_string(shape));
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  // Builds the result of a differentiable op. `backward` is only kept when
  // some parent participates in differentiation.
  static Tensor from_op(Shape shape, std::vector<double> data,
                        std::vector<Tensor> parents,
                        std::function<void(Node&)> backward) {
    Tensor out(std::move(shape), std::move(data));
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (any) {
      out.node_->requires_grad = true;
      for (auto& p : parents) out.node_->parents.push_back(p.node_);
      out.node_->backward = std::move(backward);
    }
    return out;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::span<const double> data() const { return node_->data; }
  // Only for leaves (parameters, inputs); never mutate op outputs.
  std::span<double> mutable_data() { return node_->data; }
  double item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
    return node_->data[0];
  }
  double operator[](std::size_t i) const { return node_->data[i]; }

  std::span<const double> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  void zero_grad() { node_->grad.clear(); }

  Tensor& set_requires_grad(bool on = true) {
    node_->requires_grad = on;
    return *this;
  }

  // Copy of the values without graph history.
  Tensor detach() const { return Tensor(shape(), node_->data); }

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

  // Reverse-mode sweep from a scalar. Gradients accumulate into every
  // requires_grad ancestor; call zero_grad() on leaves between passes.
  void backward() const {
    if (size() != 1) throw ShapeError("backward() requires a scalar output");
    if (!requires_grad()) return;
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        Node* p = n->parents[idx++].get();
        if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    // Intermediate grads are scratch; only leaves keep accumulating.
    for (Node* n : order)
      if (n->backward) n->grad.clear();
    node_->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backward && n->grad.size() == n->data.size()) n->backward(*n);
    }
  }

 private:
  std::shared_ptr<Node> node_;
};

// Accumulation target for parent `i` of `n`, or nullptr if it is constant.
inline double* grad_target(Tensor::Node& n, std::size_t i) {
  auto& p = *n.parents[i];
  if (!p.requires_grad) return nullptr;
  return p.ensure_grad().data();
}

}  // namespace promotion::nn

#endif  // PROMOTION_NN_TENSOR_HPP_
