#include "samba/bimamba.hpp"

#include "samba/errors.hpp"
#include "samba/ops.hpp"

namespace samba {

NormParams make_norm(std::size_t width) {
  return {Tensor::full({width}, 1.0, true), Tensor::zeros({width}, true)};
}

BiMambaLayerParams bimamba_layer_init(const MambaDims& dims, std::size_t window, std::size_t ffn_hidden,
                                      Initializer& init) {
  BiMambaLayerParams p;
  p.fwd = mamba_init(dims, init);
  p.bwd = mamba_init(dims, init);
  p.norm1 = make_norm(dims.features);
  p.ffn_in = make_projection(init, window, ffn_hidden, true);
  p.ffn_out = make_projection(init, ffn_hidden, window, true);
  p.norm2 = make_norm(dims.features);
  return p;
}

Tensor reverse_time(const Tensor& x) { return reverse_rows(x); }

Tensor bimamba_layer(const Tensor& x, const BiMambaLayerParams& p) {
  if (x.rank() != 2 || x.dim(0) != p.ffn_in.in_dim()) {
    throw ShapeError("bimamba_layer: expected " + std::to_string(p.ffn_in.in_dim()) + " time steps, got " +
                     shape_str(x.shape()));
  }
  const Tensor y1 = mamba_forward(x, p.fwd);
  const Tensor y2 = mamba_forward(reverse_time(x), p.bwd);
  const Tensor y3 = layer_norm(add(add(x, y1), reverse_time(y2)), p.norm1.gamma, p.norm1.beta);
  const Tensor hidden = activation(project(transpose(y3), p.ffn_in), Activation::relu);
  const Tensor mixed = transpose(project(hidden, p.ffn_out));
  return layer_norm(add(mixed, y3), p.norm2.gamma, p.norm2.beta);
}

Tensor bimamba_stack(const Tensor& x, const BiMambaStackParams& p) {
  if (p.layers.empty()) throw ShapeError("bimamba_stack: needs at least one layer");
  Tensor y = x;
  for (const auto& layer : p.layers) y = bimamba_layer(y, layer);
  return y;
}

}  // namespace samba
