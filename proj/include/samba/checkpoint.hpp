#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "samba/data.hpp"
#include "samba/model.hpp"

namespace samba {

inline constexpr char kCheckpointMagic[] = "SAMBA1";

// Raw container layout (all integers little-endian):
//   "SAMBA1"
//   u32 count, then count x { str name, i64 value }                 hyperparameters
//   u32 count, then count x { str }                                 feature names
//   u32 count, then count x { str name, u32 rank, u64 dims[rank],
//                             f64 values[prod(dims)] }              arrays
// where str is { u32 length, bytes }.
struct CheckpointArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct CheckpointContainer {
  std::vector<std::pair<std::string, std::int64_t>> hyper;
  std::vector<std::string> strings;
  std::vector<CheckpointArray> arrays;
};

void write_container(const std::filesystem::path& path, const CheckpointContainer& c);
// Throws SchemaError on a bad magic string or truncated content.
CheckpointContainer read_container(const std::filesystem::path& path);

// Everything eval/predict/export-graph need to reproduce a training run.
struct Checkpoint {
  SambaModel model;
  std::vector<std::string> feature_names;
  MinMaxScaler scaler;
  SplitSpec split;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace samba
