#pragma once

#include <cstdint>
#include <string>

#include "samba/params.hpp"
#include "samba/tensor.hpp"

namespace samba {

inline constexpr std::size_t kConvWidth = 4;

struct MambaDims {
  std::size_t features = 0;  // N
  std::size_t embed = 0;     // E
  std::size_t state = 0;     // H
  std::size_t conv_width = kConvWidth;
  // 0: the step-size projection maps E -> E directly (with bias).
  // r > 0: E -> r without bias, then r -> E with bias.
  std::size_t delta_rank = 0;
};

// Default low-rank width for the step-size projection, ceil(E / 16).
std::size_t default_delta_rank(std::size_t embed);

struct MambaParams {
  Projection proj_x;  // N -> E
  Projection proj_z;  // N -> E
  Tensor conv_kernel; // E x W
  Tensor conv_bias;   // E
  Projection proj_b;  // E -> H
  Projection proj_c;  // E -> H
  Tensor a;           // E x H, continuous decay rates
  Projection proj_delta_down;  // E -> r, unused (undefined) when delta_rank == 0
  Projection proj_delta;       // E -> E or r -> E, with bias
  Projection proj_out;         // E -> N

  bool low_rank_delta() const { return proj_delta_down.weight.defined(); }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    proj_x.visit(prefix + ".proj_x", f);
    proj_z.visit(prefix + ".proj_z", f);
    f(prefix + ".conv.weight", conv_kernel);
    f(prefix + ".conv.bias", conv_bias);
    proj_b.visit(prefix + ".proj_b", f);
    proj_c.visit(prefix + ".proj_c", f);
    f(prefix + ".a", a);
    if (low_rank_delta()) proj_delta_down.visit(prefix + ".proj_delta_down", f);
    proj_delta.visit(prefix + ".proj_delta", f);
    proj_out.visit(prefix + ".proj_out", f);
  }
};

// A[e, h] = -(h + 1); dense weights uniform in +-sqrt(1/fan_in); step-size bias
// chosen so that softplus(bias) is log-uniform in [1e-3, 1e-1].
MambaParams mamba_init(const MambaDims& dims, Initializer& init);
MambaParams mamba_init(const MambaDims& dims, std::uint64_t seed);

// One direction of the selective SSM block: L x N -> L x N.
Tensor mamba_forward(const Tensor& x, const MambaParams& p);

}  // namespace samba
