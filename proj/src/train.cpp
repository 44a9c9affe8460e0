#include "samba/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "samba/errors.hpp"
#include "samba/metrics.hpp"
#include "samba/ops.hpp"

namespace samba {

namespace {

// Runs job(i) for i in [0, count) on up to `threads` workers.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job&& job) {
  const std::size_t workers = std::min(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = next++; i < count; i = next++) job(i, w);
    });
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
}

std::size_t resolve_threads(std::size_t requested) {
  std::size_t n = requested;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SAMBA_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(n, 1);
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.numel() != target.numel()) {
    throw ShapeError("mse_loss: " + std::to_string(pred.numel()) + " predictions vs " +
                     std::to_string(target.numel()) + " targets");
  }
  const Tensor diff = sub(pred, reshape(target, pred.shape()));
  return scale(sum(mul(diff, diff)), 1.0 / static_cast<double>(pred.numel()));
}

void adam_step(const ParamList& params, AdamState& state, const TrainConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.numel(), 0.0);
      state.v.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameter list");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].tensor;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.numel()) throw ShapeError("adam_step: moment size mismatch for " + params[i].name);
    const bool has_grad = p.has_grad();
    auto data = p.mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = has_grad ? p.grad()[j] : 0.0;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      data[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

std::string first_non_finite(const ParamList& params) {
  for (const auto& p : params) {
    for (double v : p.tensor.data()) {
      if (!std::isfinite(v)) return p.name;
    }
    if (p.tensor.has_grad()) {
      for (double g : p.tensor.grad()) {
        if (!std::isfinite(g)) return p.name + ".grad";
      }
    }
  }
  return {};
}

BatchGradient::BatchGradient(const SambaModel& master, std::size_t threads) : threads_(std::max<std::size_t>(threads, 1)) {
  for (std::size_t i = 0; i < threads_; ++i) replicas_.push_back(master.clone());
}

double BatchGradient::compute(SambaModel& master, std::span<const Sample* const> batch) {
  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  const std::size_t total = count_params(master);
  if (chunk_grads_.size() < chunks) chunk_grads_.resize(chunks);
  chunk_sse_.assign(chunks, 0.0);
  for (auto& r : replicas_) r.copy_values_from(master);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  parallel_for(chunks, threads_, [&](std::size_t chunk, std::size_t worker) {
    SambaModel& replica = replicas_[worker];
    const auto params = replica.parameters();
    zero_grads(params);
    double sse = 0.0;
    const std::size_t stop = std::min(batch.size(), (chunk + 1) * kChunk);
    for (std::size_t i = chunk * kChunk; i < stop; ++i) {
      const Sample& s = *batch[i];
      const Tensor pred = forward(replica, s.x);
      const double err = pred.item() - s.target;
      sse += err * err;
      const Tensor diff = sub(pred, Tensor::scalar(s.target));
      backward(scale(mul(diff, diff), inv_batch));
    }
    auto& buf = chunk_grads_[chunk];
    buf.resize(total);
    std::size_t offset = 0;
    for (const auto& p : params) {
      const auto g = p.tensor.grad();
      std::copy(g.begin(), g.end(), buf.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += g.size();
    }
    chunk_sse_[chunk] = sse;
  });

  const auto params = master.parameters();
  zero_grads(params);
  double sse = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t offset = 0;
    for (const auto& p : params) {
      Tensor t = p.tensor;
      auto g = t.mutable_grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += chunk_grads_[c][offset + j];
      offset += g.size();
    }
    sse += chunk_sse_[c];
  }
  return sse;
}

std::vector<double> predict(const SambaModel& model, std::span<const Sample> samples, std::size_t threads) {
  std::vector<double> out(samples.size());
  parallel_for(samples.size(), std::max<std::size_t>(threads, 1), [&](std::size_t i, std::size_t) {
    NoGradGuard guard;
    out[i] = forward(model, samples[i].x).item();
  });
  return out;
}

std::size_t select_best_epoch(std::span<const EpochRecord> history) {
  if (history.empty()) throw std::invalid_argument("select_best_epoch: empty history");
  const bool has_val = std::any_of(history.begin(), history.end(), [](const EpochRecord& r) { return !std::isnan(r.val_rmse); });
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double score = has_val ? history[i].val_rmse : history[i].train_loss;
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

TrainResult train(const SambaModel& initial, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw InsufficientDataError("training set is empty");
  const std::size_t threads = resolve_threads(cfg.threads);

  TrainResult result;
  SambaModel model = initial.clone();
  const auto params = model.parameters();
  BatchGradient engine(model, threads);
  AdamState adam;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> val_targets;
  for (const auto& s : val_set) val_targets.push_back(s.target);

  double best_score = std::numeric_limits<double>::infinity();
  std::vector<const Sample*> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sse = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_set[order[i]]);
      const double batch_sse = engine.compute(model, batch);
      if (!std::isfinite(batch_sse)) {
        const auto bad = first_non_finite(params);
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + "; first non-finite tensor: " +
                             (bad.empty() ? std::string("loss") : bad));
      }
      sse += batch_sse;
      adam_step(params, adam, cfg);
      if (const auto bad = first_non_finite(params); !bad.empty()) {
        throw NumericalError("non-finite values after update at epoch " + std::to_string(epoch) +
                             "; first non-finite tensor: " + bad);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sse / static_cast<double>(train_set.size());
    rec.val_rmse = std::numeric_limits<double>::quiet_NaN();
    if (!val_set.empty()) {
      const auto pred = predict(model, val_set, threads);
      double sq = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) sq += (pred[i] - val_targets[i]) * (pred[i] - val_targets[i]);
      rec.val_rmse = std::sqrt(sq / static_cast<double>(pred.size()));
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const double score = val_set.empty() ? rec.train_loss : rec.val_rmse;
    if (score < best_score || epoch == 1) {
      best_score = score;
      result.best = model.clone();
      result.best_epoch = epoch - 1;
    }
  }
  return result;
}

}  // namespace samba
