#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "samba/data.hpp"
#include "samba/model.hpp"
#include "samba/train.hpp"

namespace samba::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

struct RunConfig {
  std::string data;
  std::string out = "samba-run";
  TrainConfig train;
  Hyper hyper;  // features is taken from the dataset
  SplitSpec split;
};

// Flat JSON object with snake_case keys; omitted keys keep their defaults.
// Throws ConfigError naming the offending field.
RunConfig parse_run_config(const std::string& json_text);
std::string resolved_config_json(const RunConfig& cfg);

// Six significant digits, as used in every text artifact.
std::string fmt6(double v);

// argv-style entry point: args[0] is the subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace samba::cli
