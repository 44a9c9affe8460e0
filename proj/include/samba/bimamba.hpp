#pragma once

#include <string>
#include <vector>

#include "samba/mamba.hpp"
#include "samba/params.hpp"

namespace samba {

struct NormParams {
  Tensor gamma;
  Tensor beta;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gamma", gamma);
    f(prefix + ".beta", beta);
  }
};

NormParams make_norm(std::size_t width);

struct BiMambaLayerParams {
  MambaParams fwd;
  MambaParams bwd;
  NormParams norm1;
  Projection ffn_in;   // L -> U, with bias, applied along time
  Projection ffn_out;  // U -> L, with bias
  NormParams norm2;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    fwd.visit(prefix + ".fwd", f);
    bwd.visit(prefix + ".bwd", f);
    norm1.visit(prefix + ".norm1", f);
    ffn_in.visit(prefix + ".ffn_in", f);
    ffn_out.visit(prefix + ".ffn_out", f);
    norm2.visit(prefix + ".norm2", f);
  }
};

struct BiMambaStackParams {
  std::vector<BiMambaLayerParams> layers;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t r = 0; r < layers.size(); ++r) layers[r].visit(prefix + "." + std::to_string(r), f);
  }
};

BiMambaLayerParams bimamba_layer_init(const MambaDims& dims, std::size_t window, std::size_t ffn_hidden,
                                      Initializer& init);

// Anti-diagonal permutation applied on the left: row l <- row L-1-l.
Tensor reverse_time(const Tensor& x);

// Y3 = Norm(X + Mamba_f(X) + P Mamba_b(P X));  Y = Norm(FFN(Y3^T)^T + Y3)
Tensor bimamba_layer(const Tensor& x, const BiMambaLayerParams& p);
Tensor bimamba_stack(const Tensor& x, const BiMambaStackParams& p);

}  // namespace samba
