#pragma once

#include <span>
#include <vector>

#include "samba/data.hpp"

namespace samba {

// Tomorrow's return equals today's.
std::vector<double> persistence_predictions(std::span<const Sample> samples);

// Ordinary least squares on the flattened L x N window plus an intercept.
class OlsBaseline {
 public:
  void fit(std::span<const Sample> train);
  std::vector<double> predict(std::span<const Sample> samples) const;

 private:
  std::vector<double> coef_;  // intercept first
};

}  // namespace samba
