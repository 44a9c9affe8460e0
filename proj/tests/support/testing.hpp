#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "samba/params.hpp"
#include "samba/tensor.hpp"

namespace samba::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::create(std::move(shape), std::move(v), requires_grad);
}

struct GradReport {
  std::string worst_name;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// Central differences of a scalar loss against every element of every
// parameter, compared with the recorded adjoints.
inline GradReport gradcheck(const ParamList& params, const std::function<Tensor()>& loss_fn, double step = 1e-5) {
  zero_grads(params);
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    analytic.emplace_back(p.tensor.has_grad() ? std::vector<double>(p.tensor.grad().begin(), p.tensor.grad().end())
                                              : std::vector<double>(p.tensor.numel(), 0.0));
  }
  GradReport report;
  NoGradGuard guard;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].tensor;
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = loss_fn().item();
      values[i] = saved - step;
      const double minus = loss_fn().item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = relative_error(analytic[k][i], numeric);
      ++report.checked;
      if (report.worst_name.empty() || err > report.max_rel_err) {
        report = {params[k].name, i, analytic[k][i], numeric, err, report.checked};
      }
    }
  }
  return report;
}

// Weighted sum with fixed pseudo-random weights, so that every output element
// contributes a distinct adjoint.
inline Tensor probe_loss(const Tensor& y, std::uint64_t seed = 99);

}  // namespace samba::testing

#include "samba/ops.hpp"

inline samba::Tensor samba::testing::probe_loss(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Tensor w = random_tensor(y.shape(), rng, 0.5, 1.5);
  return sum(mul(y, w));
}
