#pragma once

#include <span>
#include <vector>

namespace samba {

struct Metrics {
  double rmse = 0.0;
  double ic = 0.0;   // Pearson correlation
  double ric = 0.0;  // Spearman rank correlation
  // Set when either series has zero variance; ic and ric are then 0.
  bool degenerate = false;
};

double pearson(std::span<const double> a, std::span<const double> b);
// Ranks start at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);
double spearman(std::span<const double> a, std::span<const double> b);

// Over the whole series at once. Needs equal lengths >= 2.
Metrics evaluate(std::span<const double> pred, std::span<const double> target);

}  // namespace samba
