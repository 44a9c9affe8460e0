#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "samba/data.hpp"
#include "samba/errors.hpp"
#include "samba/synthetic.hpp"
#include "support/tempdir.hpp"
#include "support/testing.hpp"

using namespace samba;
using samba::testing::TempDir;

namespace {

const char* kFiveRows =
    "Date,Close,vol,mom\n"
    "2020-01-02,100,1.5,0.1\n"
    "2020-01-03,101,1.7,0.2\n"
    "2020-01-06,99,1.1,-0.1\n"
    "2020-01-07,100,1.2,0.0\n"
    "2020-01-08,102,1.9,0.3\n";

FeatureFrame frame_of(std::size_t days, std::size_t features = 3) { return make_signal_frame(days, std::max<std::size_t>(features, 4), 1); }

Sample sample_of(std::vector<double> x, std::size_t len, std::size_t n) {
  Sample s;
  s.x = Tensor::create({len, n}, std::move(x));
  return s;
}

}  // namespace

TEST_CASE("load a clean file") {
  TempDir dir;
  const auto f = load_feature_csv(dir.write("a.csv", kFiveRows), 3);
  CHECK(f.days() == 5);
  CHECK(f.dropped_rows == 0);
  CHECK(f.num_features() == 2);
  CHECK(f.feature_names == std::vector<std::string>{"vol", "mom"});
  CHECK(f.close[1] == 101.0);
  CHECK(f.features.at(2, 1) == -0.1);
  CHECK(f.dates.front() == "2020-01-02");
}

TEST_CASE("rows with a blank or unparseable cell are dropped") {
  TempDir dir;
  std::string text = kFiveRows;
  text += "2020-01-09,103,,0.4\n2020-01-10,104,2.0,0.5\n";
  const auto f = load_feature_csv(dir.write("b.csv", text), 3);
  CHECK(f.days() == 6);
  CHECK(f.dropped_rows == 1);
  const auto g = load_feature_csv(dir.write("c.csv", text + "2020-01-13,105,abc,0.1\n2020-01-13,106,1,1\n"), 3);
  CHECK(g.days() == 7);
  CHECK(g.dropped_rows == 2);
}

TEST_CASE("dates are sorted and Close is found by name") {
  TempDir dir;
  const auto f = load_feature_csv(dir.write("s.csv",
                                            "mom,Close,Date,vol\n"
                                            "0.3,102,2020-01-08,1.9\n"
                                            "0.1,100,2020-01-02,1.5\n"
                                            "0.0,100,2020-01-07,1.2\n"
                                            "0.2,101,2020-01-03,1.7\n"
                                            "-0.1,99,2020-01-06,1.1\n"),
                                  3);
  for (std::size_t i = 1; i < f.days(); ++i) CHECK(f.dates[i - 1] < f.dates[i]);
  CHECK(f.close == std::vector<double>{100, 101, 99, 100, 102});
  CHECK(f.feature_names == std::vector<std::string>{"mom", "vol"});
  CHECK(f.features.at(0, 1) == 1.5);
}

TEST_CASE("byte order mark is ignored") {
  TempDir dir;
  const auto f = load_feature_csv(dir.write("bom.csv", std::string("\xEF\xBB\xBF") + kFiveRows), 3);
  CHECK(f.days() == 5);
}

TEST_CASE("loader errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_feature_csv(dir / "missing.csv"), IoError);
  try {
    load_feature_csv(dir.write("nc.csv", "Date,Open,vol\n2020-01-02,1,2\n"));
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("Close") != std::string::npos);
  }
  CHECK_THROWS_AS(load_feature_csv(dir.write("nd.csv", "Day,Close,vol\n1,1,2\n")), SchemaError);
  CHECK_THROWS_AS(load_feature_csv(dir.write("five.csv", kFiveRows), 5), InsufficientDataError);
  CHECK_NOTHROW(load_feature_csv(dir / "five.csv", 3));
}

TEST_CASE("write and reload is exact") {
  TempDir dir;
  const auto f = make_market_frame(30, 3, 7);
  write_feature_csv(dir / "m.csv", f);
  const auto g = load_feature_csv(dir / "m.csv");
  CHECK(g.dates == f.dates);
  CHECK(g.close == f.close);
  CHECK(g.feature_names == f.feature_names);
  for (std::size_t i = 0; i < f.features.numel(); ++i) CHECK(g.features.data()[i] == f.features.data()[i]);
}

TEST_CASE("return targets") {
  const std::vector<double> a{100, 101}, flat{5, 5, 5}, half{100, 50}, bad{1, 0};
  CHECK(compute_return_targets(a) == std::vector<double>{0.01});
  CHECK(compute_return_targets(flat) == std::vector<double>{0, 0});
  CHECK(compute_return_targets(half) == std::vector<double>{-0.5});
  CHECK_THROWS_AS(compute_return_targets(bad), ConfigError);
}

TEST_CASE("window counts") {
  CHECK(window_dataset(frame_of(10), 5).size() == 5);
  CHECK(window_dataset(frame_of(6), 5).size() == 1);
  CHECK_THROWS_AS(window_dataset(frame_of(5), 5), InsufficientDataError);
  for (std::size_t len : {1, 2, 5, 9}) {
    for (std::size_t days = len + 1; days < 40; days += 3) CHECK(window_dataset(frame_of(days), len).size() == days - len);
  }
}

TEST_CASE("windows precede their target day") {
  const auto f = frame_of(30, 4);
  const auto samples = window_dataset(f, 5);
  for (const auto& s : samples) {
    CHECK(s.target_date == f.dates[s.target_index]);
    for (std::size_t r = 0; r < 5; ++r) {
      const std::size_t day = s.target_index - 5 + r;
      CHECK(day < s.target_index);
      for (std::size_t j = 0; j < 4; ++j) CHECK(s.x.at(r, j) == f.features.at(day, j));
    }
    const std::size_t t = s.target_index;
    CHECK(s.target == (f.close[t] - f.close[t - 1]) / f.close[t - 1]);
  }
  CHECK(std::isnan(samples.front().last_return) == false);
  CHECK(std::isnan(window_dataset(f, 1).front().last_return));
}

TEST_CASE("chronological split") {
  const auto f = frame_of(105);
  auto s = split_chronological(window_dataset(f, 5), SplitSpec{});
  CHECK(s.train.size() == 80);
  CHECK(s.val.size() == 5);
  CHECK(s.test.size() == 15);
  CHECK(s.train.back().target_index < s.val.front().target_index);
  CHECK(s.val.back().target_index < s.test.front().target_index);

  s = split_chronological(window_dataset(frame_of(25), 5), SplitSpec{});
  CHECK(s.train.size() == 16);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 3);

  CHECK_THROWS_AS(split_chronological({}, SplitSpec{}), InsufficientDataError);
  CHECK_THROWS_AS(SplitSpec({0.5, 0.3, 0.3}).validate(), ConfigError);
  CHECK_THROWS_AS(SplitSpec({1.1, -0.1, 0.0}).validate(), ConfigError);
}

TEST_CASE("min-max scaler examples") {
  std::vector<Sample> train{sample_of({2, 7}, 1, 2), sample_of({4, 7}, 1, 2), sample_of({3, 7}, 1, 2)};
  const auto scaler = scaler_fit(train);
  CHECK(scaler.degenerate(1));
  CHECK_FALSE(scaler.degenerate(0));
  const auto scaled = scaler_apply(scaler, train);
  CHECK(scaled[0].x.at(0, 0) == 0.0);
  CHECK(scaled[1].x.at(0, 0) == 1.0);
  CHECK(scaled[2].x.at(0, 0) == 0.5);
  for (const auto& s : scaled) CHECK(s.x.at(0, 1) == 0.0);
  CHECK(scaler_apply(scaler, Tensor::create({1, 2}, {5, 9})).at(0, 0) == 1.5);
  CHECK_THROWS_AS(scaler_apply(MinMaxScaler{}, train), std::logic_error);
}

TEST_CASE("scaler is fit on training windows only") {
  const auto f = frame_of(80, 6);
  const auto splits = split_chronological(window_dataset(f, 5), SplitSpec{});
  const auto scaler = scaler_fit(splits.train);
  // recompute from the training windows directly
  for (std::size_t j = 0; j < 6; ++j) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : splits.train) {
      for (std::size_t r = 0; r < 5; ++r) {
        lo = std::min(lo, s.x.at(r, j));
        hi = std::max(hi, s.x.at(r, j));
      }
    }
    CHECK(scaler.min[j] == lo);
    CHECK(scaler.max[j] == hi);
  }
  const auto scaled = scaler_apply(scaler, splits.train);
  for (std::size_t j = 0; j < 6; ++j) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : scaled) {
      for (std::size_t r = 0; r < 5; ++r) {
        lo = std::min(lo, s.x.at(r, j));
        hi = std::max(hi, s.x.at(r, j));
      }
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
  }
  // targets are left on the raw scale
  for (std::size_t i = 0; i < scaled.size(); ++i) CHECK(scaled[i].target == splits.train[i].target);
}

TEST_CASE("iso dates") {
  CHECK(is_iso_date("2020-02-29"));
  CHECK_FALSE(is_iso_date("2020-2-29"));
  CHECK_FALSE(is_iso_date("2020-13-01"));
  CHECK_FALSE(is_iso_date("yesterday"));
}
