#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "samba/data.hpp"
#include "samba/model.hpp"

namespace samba {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 1500;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // 0 picks hardware concurrency, capped by SAMBA_THREADS when set.
  std::size_t threads = 0;

  void validate() const;
};

std::size_t resolve_threads(std::size_t requested);

// Mean of squared differences, shape [1].
Tensor mse_loss(const Tensor& pred, const Tensor& target);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

// Bias-corrected Adam. A parameter without a gradient buffer is treated as
// having zero gradient.
void adam_step(const ParamList& params, AdamState& state, const TrainConfig& cfg);

// Name of the first parameter whose value or gradient is not finite, or empty.
std::string first_non_finite(const ParamList& params);

// Computes the batch gradient of mean squared error into the master model.
// Samples are processed in fixed chunks on per-thread replicas and the chunk
// gradients are summed in chunk order, so results do not depend on the
// number of threads.
class BatchGradient {
 public:
  static constexpr std::size_t kChunk = 8;

  BatchGradient(const SambaModel& master, std::size_t threads);

  // Returns the sum of squared errors over the batch.
  double compute(SambaModel& master, std::span<const Sample* const> batch);

 private:
  std::size_t threads_;
  std::vector<SambaModel> replicas_;
  std::vector<std::vector<double>> chunk_grads_;
  std::vector<double> chunk_sse_;
};

std::vector<double> predict(const SambaModel& model, std::span<const Sample> samples, std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_rmse = 0.0;  // NaN when there is no validation data
};

// Index of the epoch with the lowest validation RMSE (first on ties). Falls
// back to the training loss when no epoch has a validation score.
std::size_t select_best_epoch(std::span<const EpochRecord> history);

struct TrainResult {
  SambaModel best;
  std::size_t best_epoch = 0;  // index into history
  std::vector<EpochRecord> history;
};

// Seeded mini-batch Adam training on mean squared error. Throws NumericalError
// naming the first non-finite tensor if the loss diverges.
TrainResult train(const SambaModel& initial, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace samba
