#include "samba/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "samba/errors.hpp"

namespace samba {

std::vector<std::string> business_days(std::size_t count, int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  std::vector<std::string> out;
  sys_days d{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  while (out.size() < count) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{d};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                    static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    d += days{1};
  }
  return out;
}

FeatureFrame make_signal_frame(std::size_t days, std::size_t features, std::uint64_t seed, double noise_std) {
  if (features < 4) throw ConfigError("make_signal_frame needs at least 4 features");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> period(features), phase(features);
  for (std::size_t j = 0; j < features; ++j) {
    period[j] = 10.0 + 30.0 * unit(rng);
    phase[j] = 2.0 * std::numbers::pi * unit(rng);
  }
  std::vector<double> x(days * features, 0.0);
  for (std::size_t t = 0; t < days; ++t) {
    for (std::size_t j = 0; j < features; ++j) {
      const double prev = t > 0 ? x[(t - 1) * features + j] : 0.0;
      double v = 0.0;
      switch (j % 3) {
        case 0:  // persistent AR(1)
          v = 0.9 * prev + std::sqrt(1.0 - 0.81) * normal(rng);
          break;
        case 1:  // noisy cycle
          v = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period[j] + phase[j]) + 0.1 * normal(rng);
          break;
        default:  // short-memory AR(1)
          v = 0.5 * prev + std::sqrt(1.0 - 0.25) * normal(rng);
          break;
      }
      x[t * features + j] = v;
    }
  }

  FeatureFrame frame;
  frame.dates = business_days(days);
  frame.close.resize(days);
  frame.close[0] = 100.0;
  for (std::size_t t = 1; t < days; ++t) {
    const double* lag1 = &x[(t - 1) * features];
    const double* lag2 = t >= 2 ? &x[(t - 2) * features] : lag1;
    const double r = 0.01 * (0.6 * lag1[0] - 0.4 * lag2[2] + 0.5 * std::sin(2.0 * lag1[3]) + 0.3 * lag1[1]) +
                     noise_std * normal(rng);
    frame.close[t] = frame.close[t - 1] * (1.0 + r);
  }
  frame.features = Tensor::create({days, features}, std::move(x));
  for (std::size_t j = 0; j < features; ++j) frame.feature_names.push_back("x" + std::to_string(j));
  return frame;
}

FeatureFrame make_market_frame(std::size_t days, std::uint64_t seed, std::size_t features) {
  constexpr std::size_t kFactors = 4;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> loadings(features * kFactors);
  for (auto& v : loadings) v = normal(rng);
  std::vector<double> level(features);
  for (auto& v : level) v = 50.0 + 20.0 * normal(rng);

  std::vector<double> factor(kFactors, 0.0);
  std::vector<double> x(days * features);
  FeatureFrame frame;
  frame.dates = business_days(days, 2010, 1, 4);
  frame.close.resize(days);
  double close = 2000.0;
  std::vector<double> prev_factor(kFactors, 0.0);
  for (std::size_t t = 0; t < days; ++t) {
    prev_factor = factor;
    for (auto& f : factor) f = 0.95 * f + std::sqrt(1.0 - 0.95 * 0.95) * normal(rng);
    if (t > 0) {
      const double r = 0.003 * (prev_factor[0] - 0.5 * prev_factor[1]) + 0.01 * normal(rng);
      close *= 1.0 + r;
    }
    frame.close[t] = close;
    for (std::size_t j = 0; j < features; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < kFactors; ++k) v += loadings[j * kFactors + k] * factor[k];
      x[t * features + j] = level[j] + 3.0 * v + 2.0 * normal(rng);
    }
  }
  frame.features = Tensor::create({days, features}, std::move(x));
  for (std::size_t j = 0; j < features; ++j) frame.feature_names.push_back("feature_" + std::to_string(j + 1));
  return frame;
}

}  // namespace samba
