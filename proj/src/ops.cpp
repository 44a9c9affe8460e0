#include "samba/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "op_support.hpp"
#include "samba/errors.hpp"

namespace samba {

namespace {

using detail::in_grad;
using detail::make_result;
using detail::require_rank;
using detail::require_same_shape;

// out[m x n] (+)= a[m x k] * b[k x n]
void gemm(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double silu(double z) { return z * sigmoid(z); }

double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  gemm(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result({m, n}, std::move(out), "matmul", {&a, &b}, [m, k, n](detail::Node& self) {
    const auto& g = self.grad;
    const auto& av = self.inputs[0]->data;
    const auto& bv = self.inputs[1]->data;
    if (auto* ga = in_grad(self, 0)) {
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          (*ga)[i * k + p] += acc;
        }
      }
    }
    if (auto* gb = in_grad(self, 1)) {
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av_ip = av[i * k + p];
          if (av_ip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += av_ip * g[i * n + j];
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result(a.shape(), std::move(out), "add", {&a, &b}, [](detail::Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* g = in_grad(self, k)) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result(a.shape(), std::move(out), "sub", {&a, &b}, [](detail::Node& self) {
    if (auto* g = in_grad(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
    if (auto* g = in_grad(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.shape(), std::move(out), "mul", {&a, &b}, [](detail::Node& self) {
    const auto& av = self.inputs[0]->data;
    const auto& bv = self.inputs[1]->data;
    if (auto* g = in_grad(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    }
    if (auto* g = in_grad(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * a.data()[i];
  return make_result(a.shape(), std::move(out), "scale", {&a}, [factor](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor scale_by(const Tensor& s, const Tensor& a) {
  if (s.numel() != 1) throw ShapeError("scale_by: factor must be a single element, got " + shape_str(s.shape()));
  const double f = s.item();
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f * a.data()[i];
  return make_result(a.shape(), std::move(out), "scale_by", {&s, &a}, [](detail::Node& self) {
    const double f = self.inputs[0]->data[0];
    const auto& av = self.inputs[1]->data;
    if (auto* gs = in_grad(self, 0)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < av.size(); ++i) acc += self.grad[i] * av[i];
      (*gs)[0] += acc;
    }
    if (auto* ga = in_grad(self, 1)) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += f * self.grad[i];
    }
  });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  require_rank(a, 2, "add_row_bias");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (bias.numel() != cols) {
    throw ShapeError("add_row_bias: bias length " + std::to_string(bias.numel()) + " does not match " +
                     std::to_string(cols) + " columns");
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] += bias.data()[j];
  }
  return make_result(a.shape(), std::move(out), "add_row_bias", {&a, &bias}, [rows, cols](detail::Node& self) {
    if (auto* ga = in_grad(self, 0)) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += self.grad[i];
    }
    if (auto* gb = in_grad(self, 1)) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) (*gb)[j] += self.grad[i * cols + j];
      }
    }
  });
}

Tensor activation(const Tensor& x, Activation kind) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  switch (kind) {
    case Activation::silu:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = silu(xv[i]);
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
      break;
    case Activation::softplus:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus(xv[i]);
      break;
    case Activation::exp:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(xv[i]);
      break;
  }
  static constexpr std::string_view names[] = {"silu", "relu", "softplus", "exp"};
  return make_result(x.shape(), std::move(out), names[static_cast<int>(kind)], {&x}, [kind](detail::Node& self) {
    const auto& in = self.inputs[0]->data;
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double d = 0.0;
      switch (kind) {
        case Activation::silu: {
          const double s = sigmoid(in[i]);
          d = s * (1.0 + in[i] * (1.0 - s));
          break;
        }
        case Activation::relu:
          d = in[i] > 0.0 ? 1.0 : 0.0;
          break;
        case Activation::softplus:
          d = sigmoid(in[i]);
          break;
        case Activation::exp:
          d = self.data[i];
          break;
      }
      g[i] += d * self.grad[i];
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = xv.data() + i * cols;
    const double mx = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = std::exp(row[j] - mx);
      total += out[i * cols + j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] /= total;
  }
  return make_result(x.shape(), std::move(out), "softmax_rows", {&x}, [rows, cols](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* s = self.data.data() + i * cols;
      const double* go = self.grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += go[j] * s[j];
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += s[j] * (go[j] - dot);
    }
  });
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require_rank(x, 2, "depthwise_conv1d");
  require_rank(kernel, 2, "depthwise_conv1d kernel");
  const std::size_t len = x.dim(0), ch = x.dim(1), width = kernel.dim(1);
  if (kernel.dim(0) != ch || bias.numel() != ch) {
    throw ShapeError("depthwise_conv1d: kernel " + shape_str(kernel.shape()) + " / bias " + shape_str(bias.shape()) +
                     " do not match " + std::to_string(ch) + " channels");
  }
  const auto xv = x.data();
  const auto kv = kernel.data();
  const auto bv = bias.data();
  std::vector<double> out(len * ch);
  for (std::size_t l = 0; l < len; ++l) {
    for (std::size_t e = 0; e < ch; ++e) {
      double acc = bv[e];
      for (std::size_t w = 0; w < width; ++w) {
        // source index l - W + 1 + w, skipped when negative
        if (l + w + 1 < width) continue;
        acc += kv[e * width + w] * xv[(l + w + 1 - width) * ch + e];
      }
      out[l * ch + e] = acc;
    }
  }
  return make_result({len, ch}, std::move(out), "depthwise_conv1d", {&x, &kernel, &bias},
                     [len, ch, width](detail::Node& self) {
                       const auto& xv = self.inputs[0]->data;
                       const auto& kv = self.inputs[1]->data;
                       auto* gx = in_grad(self, 0);
                       auto* gk = in_grad(self, 1);
                       auto* gb = in_grad(self, 2);
                       for (std::size_t l = 0; l < len; ++l) {
                         for (std::size_t e = 0; e < ch; ++e) {
                           const double go = self.grad[l * ch + e];
                           if (gb) (*gb)[e] += go;
                           for (std::size_t w = 0; w < width; ++w) {
                             if (l + w + 1 < width) continue;
                             const std::size_t src = (l + w + 1 - width) * ch + e;
                             if (gk) (*gk)[e * width + w] += go * xv[src];
                             if (gx) (*gx)[src] += go * kv[e * width + w];
                           }
                         }
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 2, "layer_norm");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (gamma.numel() != cols || beta.numel() != cols) {
    throw ShapeError("layer_norm: gamma/beta must have length " + std::to_string(cols));
  }
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<double> out(xv.size());
  // normalized values and reciprocal std per row, reused by the adjoint
  std::vector<double> xhat(xv.size());
  std::vector<double> rstd(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = xv.data() + i * cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += row[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(cols);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      const double h = (row[j] - mean) * rstd[i];
      xhat[i * cols + j] = h;
      out[i * cols + j] = h * gv[j] + bv[j];
    }
  }
  return make_result(x.shape(), std::move(out), "layer_norm", {&x, &gamma, &beta},
                     [rows, cols, xhat = std::move(xhat), rstd = std::move(rstd)](detail::Node& self) {
                       const auto& gv = self.inputs[1]->data;
                       auto* gx = in_grad(self, 0);
                       auto* gg = in_grad(self, 1);
                       auto* gb = in_grad(self, 2);
                       const double n = static_cast<double>(cols);
                       for (std::size_t i = 0; i < rows; ++i) {
                         const double* go = self.grad.data() + i * cols;
                         const double* h = xhat.data() + i * cols;
                         double sum_d = 0.0, sum_dh = 0.0;
                         for (std::size_t j = 0; j < cols; ++j) {
                           const double d = go[j] * gv[j];
                           sum_d += d;
                           sum_dh += d * h[j];
                           if (gg) (*gg)[j] += go[j] * h[j];
                           if (gb) (*gb)[j] += go[j];
                         }
                         if (!gx) continue;
                         for (std::size_t j = 0; j < cols; ++j) {
                           const double d = go[j] * gv[j];
                           (*gx)[i * cols + j] += rstd[i] * (d - sum_d / n - h[j] * sum_dh / n);
                         }
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
  }
  return make_result({c, r}, std::move(out), "transpose", {&a}, [r, c](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor reverse_rows(const Tensor& a) {
  require_rank(a, 2, "reverse_rows");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>((r - 1 - i) * c), c, out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return make_result(a.shape(), std::move(out), "reverse_rows", {&a}, [r, c](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) g[(r - 1 - i) * c + j] += self.grad[i * c + j];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " cannot become " + shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(std::move(shape), std::move(out), "reshape", {&a}, [](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().dim(0);
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != rows) throw ShapeError("concat_cols: row counts differ");
    offsets.push_back(total);
    total += p.dim(1);
  }
  std::vector<double> out(rows * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t c = parts[k].dim(1);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < c; ++j) out[i * total + offsets[k] + j] = parts[k].data()[i * c + j];
    }
  }

  auto node = std::make_shared<detail::Node>();
  node->shape = {rows, total};
  node->data = std::move(out);
  node->op = "concat_cols";
  bool track = false;
  if (grad_mode_enabled()) {
    for (const auto& p : parts) track = track || p.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    for (const auto& p : parts) node->inputs.push_back(p.node());
    node->backward = [rows, total, offsets](detail::Node& self) {
      for (std::size_t k = 0; k < self.inputs.size(); ++k) {
        auto& in = *self.inputs[k];
        if (!in.requires_grad) continue;
        auto& g = in.ensure_grad();
        const std::size_t c = in.shape[1];
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i * total + offsets[k] + j];
        }
      }
    };
  }
  return Tensor::from_node(std::move(node));
}

Tensor sum_rows(const Tensor& a) {
  require_rank(a, 2, "sum_rows");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i] += a.data()[i * c + j];
  }
  return make_result({r, 1}, std::move(out), "sum_rows", {&a}, [r, c](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({1}, {total}, "sum", {&a}, [](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor pairwise_sq_dist(const Tensor& a) {
  require_rank(a, 2, "pairwise_sq_dist");
  const std::size_t n = a.dim(0), d = a.dim(1);
  const auto av = a.data();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = av[i * d + k] - av[j * d + k];
        acc += diff * diff;
      }
      out[i * n + j] = acc;
      out[j * n + i] = acc;
    }
  }
  return make_result({n, n}, std::move(out), "pairwise_sq_dist", {&a}, [n, d](detail::Node& self) {
    const auto& av = self.inputs[0]->data;
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double go = self.grad[i * n + j];
        if (go == 0.0) continue;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = 2.0 * go * (av[i * d + k] - av[j * d + k]);
          g[i * d + k] += diff;
          g[j * d + k] -= diff;
        }
      }
    }
  });
}

}  // namespace samba
