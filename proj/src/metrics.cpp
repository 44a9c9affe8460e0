#include "samba/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "samba/errors.hpp"

namespace samba {

namespace {

// NaN signals zero variance.
double correlation_or_nan(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nan("");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("metric inputs differ in length");
  if (a.size() < 2) throw ShapeError("metrics need at least two points");
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const double r = correlation_or_nan(a, b);
  return std::isnan(r) ? 0.0 : r;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double r = correlation_or_nan(ra, rb);
  return std::isnan(r) ? 0.0 : r;
}

Metrics evaluate(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  Metrics m;
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sq += (pred[i] - target[i]) * (pred[i] - target[i]);
  m.rmse = std::sqrt(sq / static_cast<double>(pred.size()));
  const double ic = correlation_or_nan(pred, target);
  if (std::isnan(ic)) {
    m.degenerate = true;
    return m;
  }
  m.ic = ic;
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(target);
  m.ric = correlation_or_nan(rp, rt);
  return m;
}

}  // namespace samba
