#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "samba/tensor.hpp"

namespace samba {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedTensor>;

std::size_t count_scalars(const ParamList& params);
void fill_params(const ParamList& params, double value);
void zero_grads(const ParamList& params);

// Symmetric fan-in bound used for every dense weight.
double init_bound(std::size_t fan_in);

// Seeded source of initial parameter values.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi);
  // Leaf tensor with requires_grad set, entries uniform in [-bound, bound].
  Tensor uniform_tensor(Shape shape, double bound);

 private:
  std::mt19937_64 rng_;
};

// Q * W (+ b). Weight is in x out; bias is undefined when absent.
struct Projection {
  Tensor weight;
  Tensor bias;

  bool has_bias() const { return bias.defined(); }
  std::size_t in_dim() const { return weight.dim(0); }
  std::size_t out_dim() const { return weight.dim(1); }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    if (has_bias()) f(prefix + ".bias", bias);
  }
};

Projection make_projection(Initializer& init, std::size_t in, std::size_t out, bool with_bias);
Tensor project(const Tensor& q, const Projection& p);

}  // namespace samba
