#include "samba/baselines.hpp"

#include <Eigen/Dense>

#include "samba/errors.hpp"

namespace samba {

std::vector<double> persistence_predictions(std::span<const Sample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.last_return);
  return out;
}

void OlsBaseline::fit(std::span<const Sample> train) {
  if (train.empty()) throw InsufficientDataError("OLS baseline needs training samples");
  const auto rows = static_cast<Eigen::Index>(train.size());
  const auto cols = static_cast<Eigen::Index>(train.front().x.numel() + 1);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto xv = train[static_cast<std::size_t>(i)].x.data();
    design(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < cols; ++j) design(i, j) = xv[static_cast<std::size_t>(j - 1)];
    y(i) = train[static_cast<std::size_t>(i)].target;
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
  coef_.assign(beta.data(), beta.data() + beta.size());
}

std::vector<double> OlsBaseline::predict(std::span<const Sample> samples) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const auto xv = s.x.data();
    if (xv.size() + 1 != coef_.size()) throw ShapeError("OLS baseline: window size differs from training");
    double v = coef_[0];
    for (std::size_t j = 0; j < xv.size(); ++j) v += coef_[j + 1] * xv[j];
    out.push_back(v);
  }
  return out;
}

}  // namespace samba
