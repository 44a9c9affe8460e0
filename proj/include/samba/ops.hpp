#pragma once

#include <vector>

#include "samba/tensor.hpp"

namespace samba {

enum class Activation { silu, relu, softplus, exp };

// Rank-2 matrix product.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// s must hold a single element; returns s * a.
Tensor scale_by(const Tensor& s, const Tensor& a);

// a: K x P, bias: P. Adds bias to every row.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);

Tensor activation(const Tensor& x, Activation kind);
double silu(double z);
double sigmoid(double z);
double softplus(double z);

Tensor softmax_rows(const Tensor& x);

// x: L x E, kernel: E x W, bias: E. Causal, left zero padding, output L x E.
Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

inline constexpr double kLayerNormEps = 1e-5;
// Normalizes each row of a rank-2 tensor with population variance.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps);

Tensor transpose(const Tensor& a);
// Row l of the result is row (rows-1-l) of a.
Tensor reverse_rows(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
// All parts share the row count; columns are laid out in order.
Tensor concat_cols(const std::vector<Tensor>& parts);
// K x P -> K x 1.
Tensor sum_rows(const Tensor& a);
// Sum of all elements, shape [1].
Tensor sum(const Tensor& a);

// a: N x d. Result[m,n] = ||a[m,:] - a[n,:]||^2, symmetric with exact zero diagonal.
Tensor pairwise_sq_dist(const Tensor& a);

}  // namespace samba
