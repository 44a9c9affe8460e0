#include "samba/mamba.hpp"

#include <cmath>

#include "samba/errors.hpp"
#include "samba/ops.hpp"
#include "samba/ssm.hpp"

namespace samba {

namespace {

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

}  // namespace

std::size_t default_delta_rank(std::size_t embed) { return (embed + 15) / 16; }

MambaParams mamba_init(const MambaDims& dims, Initializer& init) {
  const std::size_t n = dims.features, e = dims.embed, h = dims.state, w = dims.conv_width;
  if (n == 0 || e == 0 || h == 0 || w == 0) throw ConfigError("mamba_init: dimensions must be positive");
  MambaParams p;
  p.proj_x = make_projection(init, n, e, false);
  p.proj_z = make_projection(init, n, e, false);
  p.conv_kernel = init.uniform_tensor({e, w}, init_bound(w));
  p.conv_bias = init.uniform_tensor({e}, init_bound(w));
  p.proj_b = make_projection(init, e, h, false);
  p.proj_c = make_projection(init, e, h, false);

  std::vector<double> a(e * h);
  for (std::size_t i = 0; i < e; ++i) {
    for (std::size_t j = 0; j < h; ++j) a[i * h + j] = -static_cast<double>(j + 1);
  }
  p.a = Tensor::create({e, h}, std::move(a), true);

  const std::size_t delta_in = dims.delta_rank == 0 ? e : dims.delta_rank;
  if (dims.delta_rank > 0) p.proj_delta_down = make_projection(init, e, dims.delta_rank, false);
  p.proj_delta = make_projection(init, delta_in, e, true);
  for (auto& b : p.proj_delta.bias.mutable_data()) {
    const double dt = std::exp(init.uniform(std::log(1e-3), std::log(1e-1)));
    b = inverse_softplus(dt);
  }
  p.proj_out = make_projection(init, e, n, false);
  return p;
}

MambaParams mamba_init(const MambaDims& dims, std::uint64_t seed) {
  Initializer init(seed);
  return mamba_init(dims, init);
}

Tensor mamba_forward(const Tensor& x, const MambaParams& p) {
  if (x.rank() != 2) throw ShapeError("mamba_forward: input must be L x N, got " + shape_str(x.shape()));
  const Tensor x_proj = project(x, p.proj_x);
  const Tensor z_proj = project(x, p.proj_z);
  const Tensor x_conv = activation(depthwise_conv1d(x_proj, p.conv_kernel, p.conv_bias), Activation::silu);
  const Tensor b = project(x_conv, p.proj_b);
  const Tensor c = project(x_conv, p.proj_c);
  const Tensor delta_in = p.low_rank_delta() ? project(x_conv, p.proj_delta_down) : x_conv;
  const Tensor delta = activation(project(delta_in, p.proj_delta), Activation::softplus);
  const DiscretizedSsm disc = discretize(p.a, b, delta);
  const Tensor y = selective_scan(disc, c, x_conv);
  const Tensor gated = mul(y, activation(z_proj, Activation::silu));
  return project(gated, p.proj_out);
}

}  // namespace samba
