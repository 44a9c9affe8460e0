#include "samba/ssm.hpp"

#include <cmath>
#include <string>

#include "op_support.hpp"
#include "samba/errors.hpp"

namespace samba {

namespace {

using detail::in_grad;
using detail::make_result;
using detail::require_rank;

struct Dims {
  std::size_t len, ch, state;
};

Dims check_scan_shapes(const DiscretizedSsm& d, const Tensor& c, const Tensor& x) {
  require_rank(d.a_hat, 3, "scan a_hat");
  require_rank(c, 2, "scan c");
  require_rank(x, 2, "scan x");
  const Dims dims{d.a_hat.dim(0), d.a_hat.dim(1), d.a_hat.dim(2)};
  if (d.b_hat.shape() != d.a_hat.shape()) throw ShapeError("scan: a_hat and b_hat shapes differ");
  if (c.dim(0) != dims.len || c.dim(1) != dims.state) {
    throw ShapeError("scan: c must be " + shape_str({dims.len, dims.state}) + ", got " + shape_str(c.shape()));
  }
  if (x.dim(0) != dims.len || x.dim(1) != dims.ch) {
    throw ShapeError("scan: x must be " + shape_str({dims.len, dims.ch}) + ", got " + shape_str(x.shape()));
  }
  return dims;
}

}  // namespace

double zoh_input_gain(double delta, double a) {
  const double x = delta * a;
  if (std::abs(x) < kZohSeriesThreshold) return delta * (1.0 + 0.5 * x);
  return std::expm1(x) / x * delta;
}

DiscretizedSsm discretize(const Tensor& a, const Tensor& b, const Tensor& delta) {
  require_rank(a, 2, "discretize a");
  require_rank(b, 2, "discretize b");
  require_rank(delta, 2, "discretize delta");
  const std::size_t len = delta.dim(0), ch = delta.dim(1), state = a.dim(1);
  if (a.dim(0) != ch || b.dim(0) != len || b.dim(1) != state) {
    throw ShapeError("discretize: inconsistent shapes a=" + shape_str(a.shape()) + " b=" + shape_str(b.shape()) +
                     " delta=" + shape_str(delta.shape()));
  }
  const auto av = a.data();
  const auto bv = b.data();
  const auto dv = delta.data();
  const std::size_t total = len * ch * state;
  std::vector<double> a_hat(total), b_hat(total);
  // gain and its partials are kept for the adjoint of b_hat
  std::vector<double> gain(total), gain_d_delta(total), gain_d_a(total);
  for (std::size_t l = 0; l < len; ++l) {
    for (std::size_t e = 0; e < ch; ++e) {
      const double dt = dv[l * ch + e];
      for (std::size_t h = 0; h < state; ++h) {
        const std::size_t i = (l * ch + e) * state + h;
        const double a_eh = av[e * state + h];
        const double x = dt * a_eh;
        const double ex = std::exp(x);
        a_hat[i] = ex;
        if (std::abs(x) < kZohSeriesThreshold) {
          gain[i] = dt * (1.0 + 0.5 * x);
          gain_d_delta[i] = 1.0 + x;
          gain_d_a[i] = 0.5 * dt * dt;
        } else {
          const double em1 = std::expm1(x);
          gain[i] = em1 / x * dt;
          gain_d_delta[i] = ex;
          gain_d_a[i] = dt * dt * (x * ex - em1) / (x * x);
        }
        b_hat[i] = gain[i] * bv[l * state + h];
      }
    }
  }

  const Shape out_shape{len, ch, state};
  DiscretizedSsm out;
  out.a_hat = make_result(out_shape, std::move(a_hat), "zoh_a", {&a, &delta}, [len, ch, state](detail::Node& self) {
    const auto& av = self.inputs[0]->data;
    const auto& dv = self.inputs[1]->data;
    auto* ga = in_grad(self, 0);
    auto* gd = in_grad(self, 1);
    for (std::size_t l = 0; l < len; ++l) {
      for (std::size_t e = 0; e < ch; ++e) {
        for (std::size_t h = 0; h < state; ++h) {
          const std::size_t i = (l * ch + e) * state + h;
          const double g = self.grad[i] * self.data[i];
          if (ga) (*ga)[e * state + h] += g * dv[l * ch + e];
          if (gd) (*gd)[l * ch + e] += g * av[e * state + h];
        }
      }
    }
  });
  out.b_hat = make_result(out_shape, std::move(b_hat), "zoh_b", {&a, &b, &delta},
                          [len, ch, state, gain = std::move(gain), gain_d_delta = std::move(gain_d_delta),
                           gain_d_a = std::move(gain_d_a)](detail::Node& self) {
                            const auto& bv = self.inputs[1]->data;
                            auto* ga = in_grad(self, 0);
                            auto* gb = in_grad(self, 1);
                            auto* gd = in_grad(self, 2);
                            for (std::size_t l = 0; l < len; ++l) {
                              for (std::size_t e = 0; e < ch; ++e) {
                                double gd_acc = 0.0;
                                for (std::size_t h = 0; h < state; ++h) {
                                  const std::size_t i = (l * ch + e) * state + h;
                                  const double g = self.grad[i];
                                  const double gbl = g * bv[l * state + h];
                                  if (gb) (*gb)[l * state + h] += g * gain[i];
                                  if (ga) (*ga)[e * state + h] += gbl * gain_d_a[i];
                                  gd_acc += gbl * gain_d_delta[i];
                                }
                                if (gd) (*gd)[l * ch + e] += gd_acc;
                              }
                            }
                          });
  return out;
}

Tensor selective_scan(const DiscretizedSsm& d, const Tensor& c, const Tensor& x) {
  const auto [len, ch, state] = check_scan_shapes(d, c, x);
  const auto av = d.a_hat.data();
  const auto bv = d.b_hat.data();
  const auto cv = c.data();
  const auto xv = x.data();
  // every hidden state is kept for the adjoint
  std::vector<double> hs(len * ch * state);
  std::vector<double> y(len * ch);
  for (std::size_t e = 0; e < ch; ++e) {
    for (std::size_t l = 0; l < len; ++l) {
      const double xin = xv[l * ch + e];
      const std::size_t base = (l * ch + e) * state;
      const std::size_t prev = l == 0 ? 0 : ((l - 1) * ch + e) * state;
      double acc = 0.0;
      for (std::size_t h = 0; h < state; ++h) {
        const double carry = l == 0 ? 0.0 : av[base + h] * hs[prev + h];
        hs[base + h] = carry + bv[base + h] * xin;
        acc += cv[l * state + h] * hs[base + h];
      }
      y[l * ch + e] = acc;
    }
  }
  const Tensor& a_hat = d.a_hat;
  const Tensor& b_hat = d.b_hat;
  return make_result({len, ch}, std::move(y), "selective_scan", {&a_hat, &b_hat, &c, &x},
                     [len, ch, state, hs = std::move(hs)](detail::Node& self) {
                       const auto& av = self.inputs[0]->data;
                       const auto& bv = self.inputs[1]->data;
                       const auto& cv = self.inputs[2]->data;
                       const auto& xv = self.inputs[3]->data;
                       auto* ga = in_grad(self, 0);
                       auto* gb = in_grad(self, 1);
                       auto* gc = in_grad(self, 2);
                       auto* gx = in_grad(self, 3);
                       std::vector<double> gh(state);
                       for (std::size_t e = 0; e < ch; ++e) {
                         std::fill(gh.begin(), gh.end(), 0.0);
                         for (std::size_t l = len; l-- > 0;) {
                           const std::size_t base = (l * ch + e) * state;
                           const double gy = self.grad[l * ch + e];
                           double gx_acc = 0.0;
                           for (std::size_t h = 0; h < state; ++h) {
                             // gh currently holds the adjoint flowing back from step l+1
                             gh[h] += gy * cv[l * state + h];
                             if (gc) (*gc)[l * state + h] += gy * hs[base + h];
                             if (gb) (*gb)[base + h] += gh[h] * xv[l * ch + e];
                             gx_acc += gh[h] * bv[base + h];
                             if (l > 0) {
                               const std::size_t prev = ((l - 1) * ch + e) * state;
                               if (ga) (*ga)[base + h] += gh[h] * hs[prev + h];
                               gh[h] *= av[base + h];
                             }
                           }
                           if (gx) (*gx)[l * ch + e] += gx_acc;
                         }
                       }
                     });
}

Tensor scan_oracle(const DiscretizedSsm& d, const Tensor& c, const Tensor& x) {
  const auto [len, ch, state] = check_scan_shapes(d, c, x);
  if (len * ch * state > 4096) throw ShapeError("scan_oracle: instance too large for the quadratic oracle");
  const auto av = d.a_hat.data();
  const auto bv = d.b_hat.data();
  const auto cv = c.data();
  const auto xv = x.data();
  std::vector<double> y(len * ch, 0.0);
  for (std::size_t l = 0; l < len; ++l) {
    for (std::size_t e = 0; e < ch; ++e) {
      double total = 0.0;
      for (std::size_t j = 0; j <= l; ++j) {
        for (std::size_t h = 0; h < state; ++h) {
          double decay = 1.0;
          for (std::size_t k = j + 1; k <= l; ++k) decay *= av[(k * ch + e) * state + h];
          total += cv[l * state + h] * decay * bv[(j * ch + e) * state + h] * xv[j * ch + e];
        }
      }
      y[l * ch + e] = total;
    }
  }
  return Tensor::create({len, ch}, std::move(y));
}

Tensor chunked_scan(const DiscretizedSsm& d, const Tensor& c, const Tensor& x, std::size_t chunk) {
  if (chunk == 0) throw ConfigError("chunked_scan: chunk must be at least 1");
  const auto [len, ch, state] = check_scan_shapes(d, c, x);
  const auto av = d.a_hat.data();
  const auto bv = d.b_hat.data();
  const auto cv = c.data();
  const auto xv = x.data();

  // Phase 1, independent per block: local states from zero and running decay products.
  std::vector<double> local(len * ch * state), decay(len * ch * state);
  for (std::size_t start = 0; start < len; start += chunk) {
    const std::size_t stop = std::min(len, start + chunk);
    for (std::size_t e = 0; e < ch; ++e) {
      for (std::size_t l = start; l < stop; ++l) {
        const std::size_t base = (l * ch + e) * state;
        const std::size_t prev = l == start ? 0 : ((l - 1) * ch + e) * state;
        for (std::size_t h = 0; h < state; ++h) {
          const double in = bv[base + h] * xv[l * ch + e];
          if (l == start) {
            local[base + h] = in;
            decay[base + h] = av[base + h];
          } else {
            local[base + h] = av[base + h] * local[prev + h] + in;
            decay[base + h] = av[base + h] * decay[prev + h];
          }
        }
      }
    }
  }

  // Phase 2, sequential over blocks: fold the carried state into each block.
  std::vector<double> carry(ch * state, 0.0);
  std::vector<double> y(len * ch, 0.0);
  for (std::size_t start = 0; start < len; start += chunk) {
    const std::size_t stop = std::min(len, start + chunk);
    for (std::size_t e = 0; e < ch; ++e) {
      for (std::size_t l = start; l < stop; ++l) {
        const std::size_t base = (l * ch + e) * state;
        double acc = 0.0;
        for (std::size_t h = 0; h < state; ++h) {
          const double carried = start == 0 ? 0.0 : decay[base + h] * carry[e * state + h];
          const double hval = carried + local[base + h];
          acc += cv[l * state + h] * hval;
          if (l + 1 == stop) carry[e * state + h] = hval;
        }
        y[l * ch + e] = acc;
      }
    }
  }
  return Tensor::create({len, ch}, std::move(y));
}

}  // namespace samba
