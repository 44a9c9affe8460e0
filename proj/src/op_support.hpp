#pragma once

#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "samba/errors.hpp"
#include "samba/tensor.hpp"

namespace samba::detail {

// Wraps a forward result. History is only kept when an input needs it.
inline Tensor make_result(Shape shape, std::vector<double> data, std::string_view op,
                          std::initializer_list<const Tensor*> inputs, std::function<void(Node&)> bw) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool track = false;
  if (grad_mode_enabled()) {
    for (const auto* t : inputs) track = track || t->requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    for (const auto* t : inputs) node->inputs.push_back(t->node());
    node->backward = std::move(bw);
  }
  return Tensor::from_node(std::move(node));
}

// Gradient buffer of input i, or nullptr when that input does not need one.
inline std::vector<double>* in_grad(Node& self, std::size_t i) {
  auto& in = *self.inputs[i];
  return in.requires_grad ? &in.ensure_grad() : nullptr;
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace samba::detail
