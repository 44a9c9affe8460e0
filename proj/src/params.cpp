#include "samba/params.hpp"

#include <cmath>

#include "samba/errors.hpp"
#include "samba/ops.hpp"

namespace samba {

std::size_t count_scalars(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

void fill_params(const ParamList& params, double value) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    for (auto& v : t.mutable_data()) v = value;
  }
}

void zero_grads(const ParamList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

double init_bound(std::size_t fan_in) { return std::sqrt(1.0 / static_cast<double>(fan_in)); }

double Initializer::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

Tensor Initializer::uniform_tensor(Shape shape, double bound) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = uniform(-bound, bound);
  return Tensor::create(std::move(shape), std::move(v), true);
}

Projection make_projection(Initializer& init, std::size_t in, std::size_t out, bool with_bias) {
  const double bound = init_bound(in);
  Projection p;
  p.weight = init.uniform_tensor({in, out}, bound);
  if (with_bias) p.bias = init.uniform_tensor({out}, bound);
  return p;
}

Tensor project(const Tensor& q, const Projection& p) {
  if (q.rank() != 2 || q.dim(1) != p.in_dim()) {
    throw ShapeError("projection expects K x " + std::to_string(p.in_dim()) + " input, got " + shape_str(q.shape()));
  }
  Tensor out = matmul(q, p.weight);
  return p.has_bias() ? add_row_bias(out, p.bias) : out;
}

}  // namespace samba
