#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "samba/data.hpp"

namespace samba {

// Weekday dates starting at 2015-01-02.
std::vector<std::string> business_days(std::size_t count, int year = 2015, unsigned month = 1, unsigned day = 2);

// Smooth, mostly predictable series: each day's return is a fixed linear plus
// sinusoidal function of the previous two days' features, plus Gaussian noise
// with standard deviation noise_std.
FeatureFrame make_signal_frame(std::size_t days, std::size_t features, std::uint64_t seed, double noise_std = 1e-3);

// Market-like table in the CNNpred layout (Date, Close, 82 features): noisy
// features driven by a few persistent factors, returns with a weak factor
// signal buried in idiosyncratic noise.
FeatureFrame make_market_frame(std::size_t days, std::uint64_t seed, std::size_t features = 82);

}  // namespace samba
