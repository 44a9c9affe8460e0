#include "samba/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "samba/errors.hpp"

namespace samba {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::create(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " needs " + std::to_string(shape_numel(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(shape_numel(shape), value);
  return create(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return create({1}, {value}, requires_grad); }

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) { return Tensor(std::move(node)); }

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_->data.size(); }

std::span<const double> Tensor::data() const { return node_->data; }

std::span<double> Tensor::mutable_data() { return node_->data; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  if (rank() != 2) throw ShapeError("at(i,j) needs rank 2, got " + shape_str(shape()));
  return node_->data[i * node_->shape[1] + j];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) throw std::logic_error("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

void Tensor::zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

Tensor Tensor::detach() const { return create(shape(), node_->data, false); }

Tensor Tensor::clone() const { return create(shape(), node_->data, node_->requires_grad); }

std::string_view Tensor::op() const { return node_->op; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

ComputationRecord ComputationRecord::trace(const Tensor& root) {
  ComputationRecord rec;
  rec.root_ = root.node();
  if (!root.requires_grad()) return rec;

  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_map<const detail::Node*, bool> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen[root.node().get()] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && !seen[child]) {
        seen[child] = true;
        stack.emplace_back(child, 0);
      }
    } else {
      rec.nodes_.push_back(node);
      stack.pop_back();
    }
  }
  return rec;
}

std::vector<ComputationRecord::Entry> ComputationRecord::entries() const {
  std::unordered_map<const detail::Node*, std::size_t> index;
  for (std::size_t i = 0; i < nodes_.size(); ++i) index[nodes_[i]] = i;
  std::vector<Entry> out;
  out.reserve(nodes_.size());
  for (const auto* node : nodes_) {
    Entry e{node->op, {}};
    for (const auto& in : node->inputs) {
      auto it = index.find(in.get());
      if (it != index.end()) e.inputs.push_back(it->second);
    }
    out.push_back(std::move(e));
  }
  return out;
}

void ComputationRecord::run_backward() {
  if (nodes_.empty()) return;
  auto& seed = root_->ensure_grad();
  for (auto& g : seed) g += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + (loss.defined() ? shape_str(loss.shape()) : "<undefined>"));
  }
  auto rec = ComputationRecord::trace(loss);
  rec.run_backward();
}

}  // namespace samba
