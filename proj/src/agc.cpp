#include "samba/agc.hpp"

#include <cmath>

#include "samba/errors.hpp"
#include "samba/ops.hpp"

namespace samba {

double GraphParams::scale() const { return std::exp(log_scale.item()); }

GraphParams graph_init(std::size_t nodes, std::size_t embed_dim, Initializer& init) {
  if (embed_dim == 0 || embed_dim >= nodes) {
    throw ConfigError("node embedding dimension must satisfy 0 < d_e < N (d_e=" + std::to_string(embed_dim) +
                      ", N=" + std::to_string(nodes) + ")");
  }
  return {init.uniform_tensor({nodes, embed_dim}, 0.5), Tensor::zeros({1}, true)};
}

AgcParams agc_init(std::size_t nodes, std::size_t embed_dim, std::size_t order, std::size_t window,
                   Initializer& init) {
  AgcParams a;
  const double bound = init_bound((order + 1) * window);
  a.filter_factors = init.uniform_tensor({embed_dim, order + 1, window}, bound);
  a.bias_factors = init.uniform_tensor({embed_dim}, bound);
  a.head = make_projection(init, nodes, 1, false);
  return a;
}

Tensor build_adjacency(const GraphParams& g) {
  const Tensor dist = pairwise_sq_dist(g.embeddings);
  const Tensor psi = activation(g.log_scale, Activation::exp);
  return softmax_rows(activation(scale(scale_by(psi, dist), -1.0), Activation::exp));
}

std::vector<Tensor> chebyshev_basis(const Tensor& a_tilde, std::size_t order) {
  if (a_tilde.rank() != 2 || a_tilde.dim(0) != a_tilde.dim(1)) {
    throw ShapeError("chebyshev_basis: expected a square matrix, got " + shape_str(a_tilde.shape()));
  }
  const std::size_t n = a_tilde.dim(0);
  std::vector<double> eye(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
  std::vector<Tensor> basis{Tensor::create({n, n}, std::move(eye))};
  if (order >= 1) basis.push_back(a_tilde);
  for (std::size_t k = 2; k <= order; ++k) {
    basis.push_back(sub(scale(matmul(a_tilde, basis[k - 1]), 2.0), basis[k - 2]));
  }
  return basis;
}

NodeFilters materialize_filters(const GraphParams& g, const AgcParams& a) {
  const std::size_t nodes = g.embeddings.dim(0), d = g.embeddings.dim(1);
  if (a.filter_factors.rank() != 3 || a.filter_factors.dim(0) != d || a.bias_factors.numel() != d) {
    throw ShapeError("materialize_filters: factor shapes do not match embedding dimension " + std::to_string(d));
  }
  const std::size_t k1 = a.filter_factors.dim(1), len = a.filter_factors.dim(2);
  const Tensor flat = reshape(a.filter_factors, {d, k1 * len});
  NodeFilters out;
  out.weights = reshape(matmul(g.embeddings, flat), {nodes, k1, len});
  out.bias = reshape(matmul(g.embeddings, reshape(a.bias_factors, {d, 1})), {nodes});
  return out;
}

Tensor agc_forward(const Tensor& y, const GraphParams& g, const AgcParams& a) {
  const std::size_t nodes = g.embeddings.dim(0);
  const std::size_t order = a.order(), len = a.window();
  if (y.rank() != 2 || y.dim(0) != len || y.dim(1) != nodes) {
    throw ShapeError("agc_forward: expected " + shape_str({len, nodes}) + " input, got " + shape_str(y.shape()));
  }
  const Tensor adj = build_adjacency(g);
  const NodeFilters filters = materialize_filters(g, a);

  std::vector<Tensor> propagated{transpose(y)};
  if (order >= 1) propagated.push_back(matmul(adj, propagated[0]));
  for (std::size_t k = 2; k <= order; ++k) {
    propagated.push_back(sub(scale(matmul(adj, propagated[k - 1]), 2.0), propagated[k - 2]));
  }
  const Tensor stacked = concat_cols(propagated);  // N x (K+1)L, column k*L + l
  const Tensor weights = reshape(filters.weights, {nodes, (order + 1) * len});
  const Tensor node_out = add(sum_rows(mul(stacked, weights)), reshape(filters.bias, {nodes, 1}));
  return reshape(project(transpose(node_out), a.head), {1});
}

}  // namespace samba
