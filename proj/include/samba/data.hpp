#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "samba/tensor.hpp"

namespace samba {

// Daily feature table after cleaning, sorted by date.
struct FeatureFrame {
  std::vector<std::string> dates;  // ISO-8601, strictly increasing
  Tensor features;                 // T x N
  std::vector<double> close;       // T, positive
  std::vector<std::string> feature_names;
  std::size_t dropped_rows = 0;

  std::size_t days() const { return dates.size(); }
  std::size_t num_features() const { return feature_names.size(); }
};

// One window of L consecutive days and the return of the following day.
struct Sample {
  Tensor x;  // L x N
  double target = 0.0;
  std::size_t target_index = 0;
  std::string target_date;
  // Return ending on the last window day; NaN when the frame does not cover it.
  double last_return = 0.0;
};

struct SplitSpec {
  double train_frac = 0.80;
  double val_frac = 0.05;
  double test_frac = 0.15;

  void validate() const;
};

struct Splits {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;
  bool fitted = false;

  bool degenerate(std::size_t feature) const { return max[feature] == min[feature]; }
};

inline constexpr std::size_t kDefaultWindow = 5;

bool is_iso_date(std::string_view text);

// Columns "Date" and "Close" are located by name; every other column is a
// feature. Rows with a missing or unparseable cell (or a repeated date) are
// dropped and counted. Requires at least window + 2 clean rows.
FeatureFrame load_feature_csv(const std::filesystem::path& path, std::size_t window = kDefaultWindow);

void write_feature_csv(const std::filesystem::path& path, const FeatureFrame& frame);

// r[t] = (close[t+1] - close[t]) / close[t]
std::vector<double> compute_return_targets(std::span<const double> close);

// One sample per target day t = L .. T-1 (0-based); rows t-L .. t-1 form the window.
std::vector<Sample> window_dataset(const FeatureFrame& frame, std::size_t window);

// Contiguous prefix / middle / suffix with floor(train*n), floor(val*n), remainder.
Splits split_chronological(std::vector<Sample> samples, const SplitSpec& spec);

MinMaxScaler scaler_fit(std::span<const Sample> train);
std::vector<Sample> scaler_apply(const MinMaxScaler& scaler, std::span<const Sample> samples);
Tensor scaler_apply(const MinMaxScaler& scaler, const Tensor& window);

}  // namespace samba
