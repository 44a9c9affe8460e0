#pragma once

#include <string>
#include <vector>

#include "samba/params.hpp"

namespace samba {

// Learnable node embeddings and the kernel scale psi = exp(log_scale) > 0.
struct GraphParams {
  Tensor embeddings;  // N x d_e
  Tensor log_scale;   // [1]

  double scale() const;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".embeddings", embeddings);
    f(prefix + ".log_scale", log_scale);
  }
};

// Factorized per-node filter bank and the scalar readout.
struct AgcParams {
  Tensor filter_factors;  // d_e x (K+1) x L
  Tensor bias_factors;    // d_e
  Projection head;        // N -> 1, no bias

  std::size_t order() const { return filter_factors.dim(1) - 1; }
  std::size_t window() const { return filter_factors.dim(2); }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".filter_factors", filter_factors);
    f(prefix + ".bias_factors", bias_factors);
    head.visit(prefix + ".head", f);
  }
};

GraphParams graph_init(std::size_t nodes, std::size_t embed_dim, Initializer& init);
AgcParams agc_init(std::size_t nodes, std::size_t embed_dim, std::size_t order, std::size_t window,
                   Initializer& init);

// D[m,n] = ||psi_m - psi_n||^2;  A = softmax_rows(exp(-scale * D)).
Tensor build_adjacency(const GraphParams& g);

// [T_0 .. T_K] with T_0 = I, T_1 = A, T_n = 2 A T_{n-1} - T_{n-2}.
std::vector<Tensor> chebyshev_basis(const Tensor& a_tilde, std::size_t order);

struct NodeFilters {
  Tensor weights;  // N x (K+1) x L
  Tensor bias;     // N
};

// weights[n,k,l] = sum_d psi[n,d] F[d,k,l];  bias = psi * f_b.
NodeFilters materialize_filters(const GraphParams& g, const AgcParams& a);

// o'[n] = sum_k sum_l (T_k(A) Y^T)[n,l] W[n,k,l] + b[n];  returns head(o'^T) as a [1] tensor.
// T_k(A) Y^T is propagated with the Chebyshev recurrence on the N x L signal.
Tensor agc_forward(const Tensor& y, const GraphParams& g, const AgcParams& a);

}  // namespace samba
