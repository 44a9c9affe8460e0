#pragma once

#include <cstddef>

#include "samba/tensor.hpp"

namespace samba {

// Continuous parameters of a diagonal selective SSM.
//   a:     E x H   one row of H independent decay rates per channel
//   b:     L x H   input matrix per step
//   c:     L x H   output matrix per step
//   delta: L x E   step sizes, strictly positive
struct SsmInputs {
  Tensor a;
  Tensor b;
  Tensor c;
  Tensor delta;
};

// Zero-order-hold discretization, both L x E x H.
struct DiscretizedSsm {
  Tensor a_hat;
  Tensor b_hat;
};

// Below this |delta * a| the ZOH input gain uses its second-order series.
inline constexpr double kZohSeriesThreshold = 1e-6;

// Scalar ZOH gain (exp(x) - 1) / x * delta with x = delta * a, times b.
double zoh_input_gain(double delta, double a);

// a_hat = exp(delta * a), b_hat = (delta a)^-1 (exp(delta a) - 1) delta b.
DiscretizedSsm discretize(const Tensor& a, const Tensor& b, const Tensor& delta);
inline DiscretizedSsm discretize(const SsmInputs& in) { return discretize(in.a, in.b, in.delta); }

// h_l = a_hat[l] * h_{l-1} + b_hat[l] * x[l],  y[l,e] = <c[l,:], h_l[e,:]>,  h_0 = 0.
// Differentiable in every argument.
Tensor selective_scan(const DiscretizedSsm& d, const Tensor& c, const Tensor& x);

// Explicit double sum over (j <= l); for small instances (L*E*H <= 4096) only.
Tensor scan_oracle(const DiscretizedSsm& d, const Tensor& c, const Tensor& x);

// Blocked evaluation: each block is scanned from a zero state together with its
// running decay product, then the carried state is folded in block by block.
// Not differentiable.
Tensor chunked_scan(const DiscretizedSsm& d, const Tensor& c, const Tensor& x, std::size_t chunk);

}  // namespace samba
