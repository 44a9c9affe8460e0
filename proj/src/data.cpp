#include "samba/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "samba/errors.hpp"

namespace samba {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

void SplitSpec::validate() const {
  if (train_frac < 0 || val_frac < 0 || test_frac < 0) throw ConfigError("split fractions must be nonnegative");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

bool is_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc() && ptr == text.data() + pos + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return false;
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

FeatureFrame load_feature_csv(const std::filesystem::path& path, std::size_t window) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw SchemaError("dataset " + path.string() + " is empty");
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  const auto columns = split_commas(header);

  std::size_t date_col = columns.size(), close_col = columns.size();
  std::vector<std::size_t> feature_cols;
  FeatureFrame frame;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == "Date") {
      date_col = i;
    } else if (columns[i] == "Close") {
      close_col = i;
    } else {
      feature_cols.push_back(i);
      frame.feature_names.emplace_back(columns[i]);
    }
  }
  if (date_col == columns.size()) throw SchemaError("dataset " + path.string() + " has no Date column");
  if (close_col == columns.size()) throw SchemaError("dataset " + path.string() + " has no Close column");
  if (feature_cols.empty()) throw SchemaError("dataset " + path.string() + " has no feature columns");

  struct Row {
    std::string date;
    double close;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  std::size_t dropped = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    Row row;
    bool ok = cells.size() == columns.size() && is_iso_date(cells[date_col]) && parse_double(cells[close_col], row.close) &&
              row.close > 0.0;
    if (ok) {
      row.date = std::string(cells[date_col]);
      row.values.resize(feature_cols.size());
      for (std::size_t j = 0; j < feature_cols.size() && ok; ++j) ok = parse_double(cells[feature_cols[j]], row.values[j]);
    }
    if (ok) {
      rows.push_back(std::move(row));
    } else {
      ++dropped;
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
  // keep the first occurrence of a repeated date
  const auto last = std::unique(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date == b.date; });
  dropped += static_cast<std::size_t>(rows.end() - last);
  rows.erase(last, rows.end());

  if (rows.size() < window + 2) {
    throw InsufficientDataError("dataset " + path.string() + " has " + std::to_string(rows.size()) +
                                " clean rows, need at least " + std::to_string(window + 2));
  }

  const std::size_t n = feature_cols.size();
  std::vector<double> values;
  values.reserve(rows.size() * n);
  for (auto& r : rows) {
    frame.dates.push_back(std::move(r.date));
    frame.close.push_back(r.close);
    values.insert(values.end(), r.values.begin(), r.values.end());
  }
  frame.features = Tensor::create({rows.size(), n}, std::move(values));
  frame.dropped_rows = dropped;
  return frame;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureFrame& frame) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "Date,Close";
  for (const auto& name : frame.feature_names) out << ',' << name;
  out << '\n';
  out.precision(std::numeric_limits<double>::max_digits10);
  const std::size_t n = frame.num_features();
  const auto fv = frame.features.data();
  for (std::size_t t = 0; t < frame.days(); ++t) {
    out << frame.dates[t] << ',' << frame.close[t];
    for (std::size_t j = 0; j < n; ++j) out << ',' << fv[t * n + j];
    out << '\n';
  }
}

std::vector<double> compute_return_targets(std::span<const double> close) {
  for (double c : close) {
    if (!(c > 0.0)) throw ConfigError("closing prices must be positive");
  }
  std::vector<double> r;
  if (close.size() < 2) return r;
  r.reserve(close.size() - 1);
  for (std::size_t t = 0; t + 1 < close.size(); ++t) r.push_back((close[t + 1] - close[t]) / close[t]);
  return r;
}

std::vector<Sample> window_dataset(const FeatureFrame& frame, std::size_t window) {
  const std::size_t days = frame.days(), n = frame.num_features();
  if (window == 0) throw ConfigError("window length must be positive");
  if (days < window + 1) {
    throw InsufficientDataError("need at least " + std::to_string(window + 1) + " days for window " +
                                std::to_string(window) + ", have " + std::to_string(days));
  }
  const auto returns = compute_return_targets(frame.close);
  const auto fv = frame.features.data();
  std::vector<Sample> samples;
  samples.reserve(days - window);
  for (std::size_t t = window; t < days; ++t) {
    Sample s;
    s.x = Tensor::create({window, n}, std::vector<double>(fv.begin() + static_cast<std::ptrdiff_t>((t - window) * n),
                                                          fv.begin() + static_cast<std::ptrdiff_t>(t * n)));
    s.target = returns[t - 1];
    s.target_index = t;
    s.target_date = frame.dates[t];
    s.last_return = t >= 2 ? returns[t - 2] : std::numeric_limits<double>::quiet_NaN();
    samples.push_back(std::move(s));
  }
  return samples;
}

Splits split_chronological(std::vector<Sample> samples, const SplitSpec& spec) {
  spec.validate();
  if (samples.empty()) throw InsufficientDataError("cannot split an empty sample list");
  const double n = static_cast<double>(samples.size());
  // the epsilon absorbs representation error in products such as 0.05 * 100
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_frac * n + 1e-9));
  const auto n_val = std::min(samples.size() - n_train, static_cast<std::size_t>(std::floor(spec.val_frac * n + 1e-9)));
  Splits out;
  auto first = std::make_move_iterator(samples.begin());
  out.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(first + static_cast<std::ptrdiff_t>(n_train), first + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_val), std::make_move_iterator(samples.end()));
  return out;
}

MinMaxScaler scaler_fit(std::span<const Sample> train) {
  if (train.empty()) throw InsufficientDataError("scaler_fit needs a nonempty training set");
  const std::size_t n = train.front().x.dim(1);
  MinMaxScaler s;
  s.min.assign(n, std::numeric_limits<double>::infinity());
  s.max.assign(n, -std::numeric_limits<double>::infinity());
  for (const auto& sample : train) {
    const auto xv = sample.x.data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      s.min[i % n] = std::min(s.min[i % n], xv[i]);
      s.max[i % n] = std::max(s.max[i % n], xv[i]);
    }
  }
  s.fitted = true;
  return s;
}

Tensor scaler_apply(const MinMaxScaler& scaler, const Tensor& window) {
  if (!scaler.fitted) throw std::logic_error("scaler_apply called before scaler_fit");
  const std::size_t n = scaler.min.size();
  if (window.rank() != 2 || window.dim(1) != n) {
    throw ShapeError("scaler_apply: expected " + std::to_string(n) + " features, got " + shape_str(window.shape()));
  }
  std::vector<double> v(window.data().begin(), window.data().end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t j = i % n;
    v[i] = scaler.degenerate(j) ? 0.0 : (v[i] - scaler.min[j]) / (scaler.max[j] - scaler.min[j]);
  }
  return Tensor::create(window.shape(), std::move(v));
}

std::vector<Sample> scaler_apply(const MinMaxScaler& scaler, std::span<const Sample> samples) {
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    Sample copy = s;
    copy.x = scaler_apply(scaler, s.x);
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace samba
