#pragma once

#include <cstdint>
#include <string>

#include "samba/agc.hpp"
#include "samba/bimamba.hpp"
#include "samba/params.hpp"

namespace samba {

struct Hyper {
  std::size_t features = 82;    // N
  std::size_t window = 5;       // L
  std::size_t embed = 64;       // E
  std::size_t state = 64;       // H
  std::size_t ffn_hidden = 32;  // U
  std::size_t layers = 3;       // R
  std::size_t cheb_order = 3;   // K
  std::size_t node_dim = 10;    // d_e
  std::size_t conv_width = kConvWidth;
  std::size_t delta_rank = default_delta_rank(64);

  MambaDims mamba_dims() const { return {features, embed, state, conv_width, delta_rank}; }
  void validate() const;
  bool operator==(const Hyper&) const = default;
};

struct SambaModel {
  Hyper hyper;
  BiMambaStackParams stack;
  GraphParams graph;
  AgcParams agc;

  static SambaModel init(const Hyper& hyper, std::uint64_t seed);

  template <class F>
  void visit(F&& f) {
    stack.visit("stack", f);
    graph.visit("graph", f);
    agc.visit("agc", f);
  }

  // Handles share storage with the model.
  ParamList parameters() const;
  // Independent copy of every parameter.
  SambaModel clone() const;
  // Copies parameter values from a model with identical structure.
  void copy_values_from(const SambaModel& other);
};

// Scalar prediction, shape [1]: agc_forward(bimamba_stack(x)).
Tensor forward(const SambaModel& model, const Tensor& x);

std::size_t count_params(const SambaModel& model);
// Closed form for the AGC block: N d_e + 1 + d_e (K+1) L + d_e + N.
std::size_t agc_param_count(const Hyper& h);

// Multiply-accumulate count of one forward pass. Every scalar multiply (with or
// without an accompanying add) in a matmul, convolution tap, discretization,
// scan update/readout or elementwise gate counts 1; additions, activations,
// exponentials and normalization statistics count 0. Work that depends only on
// the parameters (adjacency, filter materialization) is amortized across
// samples and reported separately in parameter_only.
struct MacCount {
  std::size_t mamba = 0;
  std::size_t scan = 0;  // discretization + recurrence + readout, part of mamba
  std::size_t ffn = 0;
  std::size_t graph_conv = 0;
  std::size_t head = 0;
  std::size_t parameter_only = 0;

  std::size_t per_sample() const { return mamba + ffn + graph_conv + head; }
};
MacCount count_macs(const Hyper& h);

}  // namespace samba
