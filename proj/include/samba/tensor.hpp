#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace samba {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  // Empty until the first gradient is accumulated or zero_grad() is called.
  std::vector<double> grad;
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

// Dense row-major tensor of 64-bit floats. A Tensor is a cheap handle; copies
// share storage. Operations in ops.hpp record their adjoints on the output
// node whenever an input requires grad and grad mode is enabled.
class Tensor {
 public:
  Tensor() = default;

  static Tensor create(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Mutable access for leaves (optimizer updates, test perturbations).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // New leaf with a copy of the data and no history.
  Tensor detach() const;
  // Deep copy that keeps requires_grad but drops history and gradient.
  Tensor clone() const;

  std::string_view op() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// Disables recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Topologically ordered list of the grad-requiring nodes reachable from a root.
class ComputationRecord {
 public:
  struct Entry {
    std::string_view op;
    // Indices of grad-requiring inputs within this record.
    std::vector<std::size_t> inputs;
  };

  static ComputationRecord trace(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  std::vector<Entry> entries() const;

  // Seeds d(root)/d(root) = 1 and replays every adjoint once in reverse order.
  void run_backward();

 private:
  std::vector<detail::Node*> nodes_;
  std::shared_ptr<detail::Node> root_;
};

// Accumulates d(loss)/dT into every grad-requiring tensor reachable from loss.
// Throws ShapeError if loss is not a scalar.
void backward(const Tensor& loss);

}  // namespace samba
