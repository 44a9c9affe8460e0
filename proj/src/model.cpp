#include "samba/model.hpp"

#include "samba/errors.hpp"

namespace samba {

void Hyper::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(features, "features");
  positive(window, "window");
  positive(embed, "embed_dim");
  positive(state, "state_dim");
  positive(ffn_hidden, "ffn_hidden");
  positive(layers, "layers");
  positive(node_dim, "node_dim");
  positive(conv_width, "conv_width");
  if (node_dim >= features) {
    throw ConfigError("node_dim must be smaller than the feature count (" + std::to_string(node_dim) +
                      " >= " + std::to_string(features) + ")");
  }
}

SambaModel SambaModel::init(const Hyper& hyper, std::uint64_t seed) {
  hyper.validate();
  Initializer init(seed);
  SambaModel m;
  m.hyper = hyper;
  for (std::size_t r = 0; r < hyper.layers; ++r) {
    m.stack.layers.push_back(bimamba_layer_init(hyper.mamba_dims(), hyper.window, hyper.ffn_hidden, init));
  }
  m.graph = graph_init(hyper.features, hyper.node_dim, init);
  m.agc = agc_init(hyper.features, hyper.node_dim, hyper.cheb_order, hyper.window, init);
  return m;
}

ParamList SambaModel::parameters() const {
  SambaModel view = *this;
  ParamList out;
  view.visit([&](const std::string& name, Tensor& t) { out.push_back({name, t}); });
  return out;
}

SambaModel SambaModel::clone() const {
  SambaModel copy = *this;
  copy.visit([](const std::string&, Tensor& t) { t = t.clone(); });
  return copy;
}

void SambaModel::copy_values_from(const SambaModel& other) {
  const auto src = other.parameters();
  const auto dst = parameters();
  if (src.size() != dst.size()) throw ShapeError("copy_values_from: parameter lists differ");
  for (std::size_t i = 0; i < src.size(); ++i) {
    Tensor t = dst[i].tensor;
    if (t.numel() != src[i].tensor.numel()) throw ShapeError("copy_values_from: size mismatch at " + dst[i].name);
    std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), t.mutable_data().begin());
  }
}

Tensor forward(const SambaModel& model, const Tensor& x) {
  const auto& h = model.hyper;
  if (x.rank() != 2 || x.dim(0) != h.window || x.dim(1) != h.features) {
    throw ShapeError("forward: model expects " + shape_str({h.window, h.features}) + " input, got " +
                     shape_str(x.shape()));
  }
  return agc_forward(bimamba_stack(x, model.stack), model.graph, model.agc);
}

std::size_t count_params(const SambaModel& model) { return count_scalars(model.parameters()); }

std::size_t agc_param_count(const Hyper& h) {
  const std::size_t n = h.features, d = h.node_dim;
  return n * d + 1 + d * (h.cheb_order + 1) * h.window + d + n;
}

MacCount count_macs(const Hyper& h) {
  const std::size_t n = h.features, l = h.window, e = h.embed, s = h.state, u = h.ffn_hidden;
  MacCount m;
  // one Mamba direction
  std::size_t unit = 0;
  unit += 2 * l * n * e;          // x and z projections
  unit += l * e * h.conv_width;   // depthwise convolution
  unit += 2 * l * e * s;          // B and C projections
  unit += h.delta_rank == 0 ? l * e * e : 2 * l * e * h.delta_rank;
  const std::size_t scan = l * e * s   // delta * A
                           + l * e * s  // gain * B
                           + l * e * s  // a_hat * h
                           + l * e * s  // b_hat * x
                           + l * e * s; // <C, h>
  unit += scan;
  unit += l * e;      // gate
  unit += l * e * n;  // output projection
  m.mamba = 2 * h.layers * unit;
  m.scan = 2 * h.layers * scan;
  m.ffn = h.layers * 2 * n * l * u;
  // Chebyshev propagation of the N x L signal plus the filter contraction
  m.graph_conv = (h.cheb_order >= 1 ? h.cheb_order : 0) * n * n * l + n * (h.cheb_order + 1) * l;
  m.head = n;
  m.parameter_only = n * n * h.node_dim                      // pairwise distances
                     + n * h.node_dim * (h.cheb_order + 1) * l  // filter weights
                     + n * h.node_dim;                          // filter bias
  return m;
}

}  // namespace samba
