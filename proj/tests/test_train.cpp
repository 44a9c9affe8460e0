#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "samba/baselines.hpp"
#include "samba/checkpoint.hpp"
#include "samba/errors.hpp"
#include "samba/metrics.hpp"
#include "samba/model.hpp"
#include "samba/ops.hpp"
#include "samba/synthetic.hpp"
#include "samba/train.hpp"
#include "support/reference.hpp"
#include "support/tempdir.hpp"
#include "support/testing.hpp"

using namespace samba;
using samba::testing::random_tensor;
using samba::testing::TempDir;

namespace {

Hyper tiny_hyper() {
  Hyper h;
  h.features = 6;
  h.window = 5;
  h.embed = 8;
  h.state = 4;
  h.ffn_hidden = 4;
  h.layers = 1;
  h.cheb_order = 2;
  h.node_dim = 3;
  h.delta_rank = default_delta_rank(8);
  return h;
}

Splits signal_splits(std::size_t days, std::size_t features, std::uint64_t seed) {
  const auto frame = make_signal_frame(days, features, seed);
  auto raw = split_chronological(window_dataset(frame, 5), SplitSpec{});
  const auto scaler = scaler_fit(raw.train);
  return {scaler_apply(scaler, raw.train), scaler_apply(scaler, raw.val), scaler_apply(scaler, raw.test)};
}

std::vector<double> flat_params(const SambaModel& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

}  // namespace

TEST_CASE("zero-parameter model predicts exactly zero") {
  auto m = SambaModel::init(tiny_hyper(), 1);
  fill_params(m.parameters(), 0.0);
  std::mt19937_64 rng(61);
  CHECK(forward(m, random_tensor({5, 6}, rng, -5, 5)).item() == 0.0);
  CHECK_THROWS_AS(forward(m, random_tensor({4, 6}, rng)), ShapeError);
  CHECK_THROWS_AS(forward(m, random_tensor({5, 7}, rng)), ShapeError);
}

TEST_CASE("model forward matches the extended-precision reference") {
  std::mt19937_64 rng(62);
  auto h = tiny_hyper();
  h.layers = 2;
  const auto m = SambaModel::init(h, 2);
  for (int i = 0; i < 5; ++i) {
    const auto x = random_tensor({5, 6}, rng);
    CHECK(std::abs(forward(m, x).item() - static_cast<double>(reference::model_forward<long double>(m, x))) < 1e-14);
  }
}

TEST_CASE("end-to-end gradients of a tiny model") {
  std::mt19937_64 rng(63);
  for (std::size_t rank : {std::size_t{0}, std::size_t{1}}) {
    auto h = tiny_hyper();
    h.delta_rank = rank;
    auto m = SambaModel::init(h, 3);
    const auto x = random_tensor({5, 6}, rng);
    const auto report = reference::gradcheck(m.parameters(), [&] { return forward(m, x); },
                                             [&] { return reference::model_forward<long double>(m, x); });
    INFO("rank " << rank << ": " << report.worst_name << "[" << report.worst_index << "] " << report.analytic << " vs "
                 << report.numeric << " over " << report.checked);
    CHECK(report.max_rel_err < 1e-4);
    CHECK(report.checked == count_params(m));
  }
}

TEST_CASE("clone and copy_values_from") {
  auto a = SambaModel::init(tiny_hyper(), 4);
  auto b = a.clone();
  CHECK(flat_params(a) == flat_params(b));
  b.parameters()[0].tensor.mutable_data()[0] += 1.0;
  CHECK(flat_params(a) != flat_params(b));
  b.copy_values_from(a);
  CHECK(flat_params(a) == flat_params(b));
  CHECK(flat_params(SambaModel::init(tiny_hyper(), 4)) == flat_params(a));
  CHECK(flat_params(SambaModel::init(tiny_hyper(), 5)) != flat_params(a));
}

TEST_CASE("parameter accounting") {
  const Hyper full;
  const std::size_t n = 82, l = 5, e = 64, s = 64, u = 32, w = 4, r = full.delta_rank;
  const std::size_t direct_delta = e * e + e, low_rank_delta = e * r + r * e + e;
  const std::size_t unit = 2 * n * e + e * w + e + 2 * e * s + e * s + e * n;
  const std::size_t layer_rest = 4 * n + (l * u + u) + (u * l + l);
  CHECK(layer_rest == 685);
  CHECK(count_params(SambaModel::init(full, 0)) == 3 * (2 * (unit + low_rank_delta) + layer_rest) + 1113);
  Hyper literal = full;
  literal.delta_rank = 0;
  CHECK(count_params(SambaModel::init(literal, 0)) == 3 * (2 * (unit + direct_delta) + layer_rest) + 1113);
  CHECK(count_scalars(SambaModel::init(full, 0).parameters()) == count_params(SambaModel::init(full, 0)));
}

TEST_CASE("MAC count is linear in the window") {
  for (std::size_t len : {3, 5, 8}) {
    Hyper a;
    a.window = len;
    Hyper b = a;
    b.window = 2 * len;
    const auto ma = count_macs(a), mb = count_macs(b);
    CHECK(mb.mamba == 2 * ma.mamba);
    CHECK(mb.scan == 2 * ma.scan);
    CHECK(mb.ffn == 2 * ma.ffn);
    CHECK(mb.graph_conv == 2 * ma.graph_conv);
    CHECK(mb.head == ma.head);
    CHECK(mb.per_sample() - mb.head == 2 * (ma.per_sample() - ma.head));
  }
}

TEST_CASE("mse loss") {
  const auto p = Tensor::create({2}, {1, 1});
  CHECK(mse_loss(p, p).item() == 0.0);
  CHECK(mse_loss(p, Tensor::zeros({2})).item() == 1.0);
  CHECK_THROWS_AS(mse_loss(p, Tensor::zeros({3})), ShapeError);
}

TEST_CASE("adam") {
  TrainConfig cfg;
  auto t = Tensor::create({2}, {0.3, -0.7}, true);
  ParamList params{{"t", t}};
  AdamState state;
  t.zero_grad();
  adam_step(params, state, cfg);
  CHECK(t.data()[0] == 0.3);
  CHECK(t.data()[1] == -0.7);

  auto s = Tensor::create({1}, {0.5}, true);
  AdamState st;
  s.mutable_grad()[0] = 1.0;
  adam_step({{"s", s}}, st, cfg);
  CHECK(s.data()[0] - 0.5 == doctest::Approx(-0.001).epsilon(1e-6));

  // independent scalar trace over several steps with varying gradients
  auto q = Tensor::create({1}, {1.0}, true);
  AdamState sq;
  double theta = 1.0, m = 0.0, v = 0.0;
  const double grads[] = {0.5, -2.0, 0.1, 3.0, -0.25};
  for (int k = 0; k < 5; ++k) {
    q.mutable_grad()[0] = grads[k];
    adam_step({{"q", q}}, sq, cfg);
    m = 0.9 * m + 0.1 * grads[k];
    v = 0.999 * v + 0.001 * grads[k] * grads[k];
    const double mh = m / (1 - std::pow(0.9, k + 1)), vh = v / (1 - std::pow(0.999, k + 1));
    theta -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(q.data()[0] == doctest::Approx(theta).epsilon(1e-14));
  }
}

TEST_CASE("metrics") {
  const std::vector<double> t{0.1, -0.2, 0.05, 0.3, -0.1};
  auto m = evaluate(t, t);
  CHECK(m.rmse == 0.0);
  CHECK(std::abs(m.ic - 1.0) < 1e-12);
  CHECK(std::abs(m.ric - 1.0) < 1e-12);
  std::vector<double> neg;
  for (double v : t) neg.push_back(-v);
  m = evaluate(neg, t);
  CHECK(std::abs(m.ic + 1.0) < 1e-12);
  CHECK(std::abs(m.ric + 1.0) < 1e-12);

  const std::vector<double> a{1, 2, 3}, b{1, 3, 2};
  CHECK(std::abs(spearman(a, b) - 0.5) < 1e-12);
  const std::vector<double> ties{1, 2, 2, 3};
  CHECK(average_ranks(ties) == std::vector<double>{1, 2.5, 2.5, 4});

  const std::vector<double> ones{1, 1}, zeros{0, 0};
  m = evaluate(ones, zeros);
  CHECK(m.rmse == 1.0);
  CHECK(m.degenerate);
  CHECK(m.ic == 0.0);
  CHECK(m.ric == 0.0);

  const std::vector<double> one{1.0}, three{1, 2, 3};
  CHECK_THROWS(evaluate(one, one));
  CHECK_THROWS(evaluate(three, ones));
}

TEST_CASE("metric invariances") {
  std::mt19937_64 rng(64);
  std::normal_distribution<double> nd;
  std::vector<double> p(50), t(50);
  for (std::size_t i = 0; i < 50; ++i) {
    t[i] = nd(rng);
    p[i] = 0.6 * t[i] + nd(rng);
  }
  const auto base = evaluate(p, t);
  std::vector<double> ps, ts, affine, mono;
  for (std::size_t i = 0; i < 50; ++i) {
    ps.push_back(3.0 * p[i]);
    ts.push_back(3.0 * t[i]);
    affine.push_back(2.5 * p[i] - 7.0);
    mono.push_back(std::exp(p[i]) + p[i] * p[i] * p[i]);
  }
  CHECK(evaluate(ps, ts).rmse == doctest::Approx(3.0 * base.rmse).epsilon(1e-13));
  CHECK(std::abs(evaluate(affine, t).ic - base.ic) < 1e-12);
  CHECK(std::abs(evaluate(affine, t).ric - base.ric) < 1e-12);
  CHECK(std::abs(evaluate(mono, t).ric - base.ric) < 1e-12);
}

TEST_CASE("best epoch selection") {
  const std::vector<EpochRecord> h{{1, 0.5, 3.0}, {2, 0.4, 1.0}, {3, 0.3, 2.0}};
  CHECK(select_best_epoch(h) == 1);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<EpochRecord> no_val{{1, 0.5, nan}, {2, 0.2, nan}, {3, 0.3, nan}};
  CHECK(select_best_epoch(no_val) == 1);
  const std::vector<EpochRecord> tie{{1, 0.5, 1.0}, {2, 0.4, 1.0}};
  CHECK(select_best_epoch(tie) == 0);
}

TEST_CASE("training is deterministic across runs and thread counts") {
  const auto data = signal_splits(90, 6, 5);
  const auto init = SambaModel::init(tiny_hyper(), 6);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.lr = 3e-3;
  cfg.threads = 1;
  const auto a = train(init, data.train, data.val, cfg);
  const auto b = train(init, data.train, data.val, cfg);
  cfg.threads = 3;
  const auto c = train(init, data.train, data.val, cfg);
  REQUIRE(a.history.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].train_loss == c.history[i].train_loss);
    CHECK(a.history[i].val_rmse == c.history[i].val_rmse);
  }
  CHECK(flat_params(a.best) == flat_params(b.best));
  CHECK(flat_params(a.best) == flat_params(c.best));

  // the returned model is the one scored at the selected epoch
  CHECK(a.best_epoch == select_best_epoch(a.history));
  std::vector<double> targets;
  for (const auto& s : data.val) targets.push_back(s.target);
  CHECK(evaluate(predict(a.best, data.val), targets).rmse == a.history[a.best_epoch].val_rmse);
}

TEST_CASE("training reduces the loss on a learnable signal") {
  const auto data = signal_splits(160, 6, 7);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.lr = 3e-3;
  const auto result = train(SambaModel::init(tiny_hyper(), 8), data.train, data.val, cfg);
  INFO("epoch 1 " << result.history.front().train_loss << ", final " << result.history.back().train_loss);
  CHECK(result.history.back().train_loss < 0.1 * result.history.front().train_loss);
}

TEST_CASE("divergence aborts with the offending tensor") {
  auto data = signal_splits(60, 6, 9);
  auto m = SambaModel::init(tiny_hyper(), 10);
  m.agc.head.weight.mutable_data()[2] = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  cfg.epochs = 2;
  try {
    train(m, data.train, data.val, cfg);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("first non-finite tensor: ") != std::string::npos);
    CHECK(msg.find("stack.0.fwd.proj_x.weight") != std::string::npos);
  }
  CHECK(first_non_finite(m.parameters()) == "agc.head.weight");
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  const auto data = signal_splits(60, 6, 11);
  Checkpoint ck;
  ck.model = SambaModel::init(tiny_hyper(), 12);
  for (std::size_t j = 0; j < 6; ++j) ck.feature_names.push_back("f" + std::to_string(j));
  ck.scaler = scaler_fit(data.train);
  ck.split = {0.7, 0.1, 0.2};
  save_checkpoint(dir / "m.samba", ck);
  const auto back = load_checkpoint(dir / "m.samba");
  CHECK(back.model.hyper == ck.model.hyper);
  CHECK(flat_params(back.model) == flat_params(ck.model));
  CHECK(back.feature_names == ck.feature_names);
  CHECK(back.scaler.min == ck.scaler.min);
  CHECK(back.scaler.max == ck.scaler.max);
  CHECK(back.split.train_frac == 0.7);
  CHECK(back.split.test_frac == 0.2);

  const std::string bytes = testing::slurp(dir / "m.samba");
  CHECK(bytes.substr(0, 6) == "SAMBA1");
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 6, 4);
  CHECK(count == 10);

  dir.write("bad.samba", "SAMBA2" + bytes.substr(6));
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.samba"), SchemaError);
  dir.write("short.samba", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir / "short.samba"), SchemaError);
  CHECK_THROWS_AS(load_checkpoint(dir / "none.samba"), IoError);
}

TEST_CASE("baselines") {
  const auto frame = make_signal_frame(80, 5, 13);
  const auto samples = window_dataset(frame, 5);
  const auto persist = persistence_predictions(samples);
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK(persist[i] == samples[i].last_return);

  // OLS recovers an exactly linear target
  std::mt19937_64 rng(65);
  std::vector<Sample> lin;
  for (int i = 0; i < 60; ++i) {
    Sample s;
    s.x = random_tensor({2, 3}, rng);
    s.target = 0.5 + 2.0 * s.x.at(0, 0) - s.x.at(1, 2);
    lin.push_back(s);
  }
  OlsBaseline ols;
  ols.fit(lin);
  const auto pred = ols.predict(lin);
  for (std::size_t i = 0; i < lin.size(); ++i) CHECK(pred[i] == doctest::Approx(lin[i].target).epsilon(1e-10));
}

TEST_CASE("thread resolution honours SAMBA_THREADS") {
  setenv("SAMBA_THREADS", "2", 1);
  CHECK(resolve_threads(0) <= 2);
  CHECK(resolve_threads(8) == 2);
  unsetenv("SAMBA_THREADS");
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
