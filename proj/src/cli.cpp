#include "samba/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "samba/checkpoint.hpp"
#include "samba/errors.hpp"
#include "samba/metrics.hpp"

namespace samba::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.samba";

// Exclusive marker file guarding an output directory for one command.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".samba.lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw ConfigError("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
  }
  ~OutputLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

double round6(double v) { return std::stod(fmt6(v)); }

template <class T>
void read_field(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("config field '" + std::string(key) + "' must be a string");
    dst = v.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError("config field '" + std::string(key) + "' must be a number");
    dst = v.get<T>();
  } else {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError("config field '" + std::string(key) + "' must be a nonnegative integer");
    }
    dst = v.get<T>();
  }
}

struct Prepared {
  FeatureFrame frame;
  Splits raw;
};

Prepared load_and_split(const fs::path& data, std::size_t window, const SplitSpec& split) {
  Prepared p;
  p.frame = load_feature_csv(data, window);
  p.raw = split_chronological(window_dataset(p.frame, window), split);
  return p;
}

void require_feature_count(const Checkpoint& ckpt, const FeatureFrame& frame) {
  if (frame.num_features() != ckpt.model.hyper.features) {
    throw ConfigError("checkpoint expects N=" + std::to_string(ckpt.model.hyper.features) +
                      " features but the dataset has N=" + std::to_string(frame.num_features()));
  }
}

fs::path default_out(const std::string& out, const std::string& checkpoint) {
  if (!out.empty()) return out;
  const auto parent = fs::path(checkpoint).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

int cmd_train(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              const std::optional<std::size_t>& epochs, const std::optional<double>& lr,
              const std::optional<std::string>& out_dir, std::ostream& out) {
  RunConfig cfg = parse_run_config(read_text(config_path));
  if (seed) cfg.train.seed = *seed;
  if (epochs) cfg.train.epochs = *epochs;
  if (lr) cfg.train.lr = *lr;
  if (out_dir) cfg.out = *out_dir;
  if (cfg.data.empty()) throw ConfigError("config field 'data' is required");
  cfg.train.validate();
  cfg.split.validate();

  // relative dataset paths are resolved against the config file
  fs::path data = cfg.data;
  if (data.is_relative() && !fs::exists(data)) data = fs::path(config_path).parent_path() / data;
  cfg.data = fs::absolute(data).lexically_normal().string();

  const fs::path out_path = cfg.out;
  OutputLock lock(out_path);

  auto prep = load_and_split(data, cfg.hyper.window, cfg.split);
  cfg.hyper.features = prep.frame.num_features();
  cfg.hyper.validate();
  const MinMaxScaler scaler = scaler_fit(prep.raw.train);
  const auto train_set = scaler_apply(scaler, prep.raw.train);
  const auto val_set = scaler_apply(scaler, prep.raw.val);

  out << "dataset: " << prep.frame.days() << " days, " << prep.frame.num_features() << " features, "
      << prep.frame.dropped_rows << " rows dropped\n";
  out << "samples: train " << train_set.size() << ", val " << val_set.size() << ", test " << prep.raw.test.size()
      << "\n";

  const SambaModel initial = SambaModel::init(cfg.hyper, cfg.train.seed);
  out << "parameters: " << count_params(initial) << "\n";
  const std::size_t report_every = std::max<std::size_t>(1, cfg.train.epochs / 10);
  const auto result = train(initial, train_set, val_set, cfg.train, [&](const EpochRecord& r) {
    if (r.epoch % report_every == 0 || r.epoch == 1) {
      out << "epoch " << r.epoch << " train_loss " << fmt6(r.train_loss) << " val_rmse " << fmt6(r.val_rmse) << "\n";
    }
  });

  std::ostringstream history;
  history << "epoch,train_loss,val_rmse\n";
  for (const auto& r : result.history) {
    history << r.epoch << ',' << fmt6(r.train_loss) << ',' << fmt6(r.val_rmse) << '\n';
  }
  write_text(out_path / "history.csv", history.str());
  save_checkpoint(out_path / kCheckpointFile, {result.best, prep.frame.feature_names, scaler, cfg.split});
  write_text(out_path / "resolved-config.json", resolved_config_json(cfg));
  out << "best epoch " << result.history[result.best_epoch].epoch << ", checkpoint written to "
      << (out_path / kCheckpointFile).string() << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& out_dir, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  auto prep = load_and_split(data, ckpt.model.hyper.window, ckpt.split);
  require_feature_count(ckpt, prep.frame);
  if (!ckpt.scaler.fitted) throw SchemaError(checkpoint + ": checkpoint has no scaler statistics");
  if (prep.raw.test.size() < 2) throw InsufficientDataError("test split has fewer than two samples");

  const auto test = scaler_apply(ckpt.scaler, prep.raw.test);
  const auto pred = predict(ckpt.model, test, resolve_threads(0));
  std::vector<double> actual;
  for (const auto& s : test) actual.push_back(s.target);
  const Metrics m = evaluate(pred, actual);

  const fs::path out_path = default_out(out_dir, checkpoint);
  OutputLock lock(out_path);
  json j;
  j["rmse"] = round6(m.rmse);
  j["ic"] = round6(m.ic);
  j["ric"] = round6(m.ric);
  j["degenerate"] = m.degenerate;
  j["n_test"] = test.size();
  write_text(out_path / "metrics.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "date,predicted,actual\n";
  for (std::size_t i = 0; i < test.size(); ++i) csv << test[i].target_date << ',' << fmt6(pred[i]) << ',' << fmt6(actual[i]) << '\n';
  write_text(out_path / "predictions.csv", csv.str());

  out << "test samples " << test.size() << "\n";
  out << "rmse " << fmt6(m.rmse) << "\nic " << fmt6(m.ic) << "\nric " << fmt6(m.ric) << "\n";
  if (m.degenerate) out << "warning: zero-variance series, ic/ric reported as 0\n";
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& data, const std::string& date, std::ostream& out) {
  if (!is_iso_date(date)) throw ConfigError("--date must be YYYY-MM-DD, got '" + date + "'");
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const std::size_t window = ckpt.model.hyper.window;
  const FeatureFrame frame = load_feature_csv(data, window);
  require_feature_count(ckpt, frame);

  const auto prior = static_cast<std::size_t>(std::lower_bound(frame.dates.begin(), frame.dates.end(), date) - frame.dates.begin());
  if (prior < window) {
    throw InsufficientDataError("predicting " + date + " needs the L=" + std::to_string(window) +
                                " preceding trading days, dataset has " + std::to_string(prior));
  }
  const std::size_t n = frame.num_features();
  const auto fv = frame.features.data();
  const Tensor raw = Tensor::create({window, n}, std::vector<double>(fv.begin() + static_cast<std::ptrdiff_t>((prior - window) * n),
                                                                     fv.begin() + static_cast<std::ptrdiff_t>(prior * n)));
  NoGradGuard guard;
  const double value = forward(ckpt.model, scaler_apply(ckpt.scaler, raw)).item();
  out << fmt6(value) << "\n";
  return kExitOk;
}

int cmd_export_graph(const std::string& checkpoint, const std::string& out_dir, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  NoGradGuard guard;
  const Tensor adj = build_adjacency(ckpt.model.graph);
  const std::size_t n = adj.dim(0);
  const auto& names = ckpt.feature_names;

  const fs::path out_path = default_out(out_dir, checkpoint);
  OutputLock lock(out_path);
  std::ostringstream csv;
  for (std::size_t j = 0; j < n; ++j) csv << (j ? "," : "") << names[j];
  csv << '\n';
  double min_sum = INFINITY, max_sum = -INFINITY;
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      csv << (j ? "," : "") << fmt6(adj.at(i, j));
      row += adj.at(i, j);
      degree[j] += adj.at(i, j);
    }
    csv << '\n';
    min_sum = std::min(min_sum, row);
    max_sum = std::max(max_sum, row);
  }
  write_text(out_path / "adjacency.csv", csv.str());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
  std::ostringstream ranked;
  ranked << "rank,feature,degree\n";
  for (std::size_t r = 0; r < n; ++r) ranked << r + 1 << ',' << names[order[r]] << ',' << fmt6(degree[order[r]]) << '\n';
  write_text(out_path / "feature_degree.csv", ranked.str());

  char line[128];
  std::snprintf(line, sizeof line, "row sums: min %.12f max %.12f\n", min_sum, max_sum);
  out << "wrote " << (out_path / "adjacency.csv").string() << " (" << n << " x " << n << ")\n" << line;
  return kExitOk;
}

}  // namespace

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  static const std::set<std::string> known = {
      "data",       "out",       "seed",       "epochs",     "lr",         "batch_size", "beta1",
      "beta2",      "eps",       "window",     "embed_dim",  "state_dim",  "ffn_hidden", "layers",
      "cheb_order", "node_dim",  "delta_rank", "conv_width", "train_frac", "val_frac",   "test_frac"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  RunConfig cfg;
  bool delta_rank_given = j.contains("delta_rank");
  read_field(j, "data", cfg.data);
  read_field(j, "out", cfg.out);
  read_field(j, "seed", cfg.train.seed);
  read_field(j, "epochs", cfg.train.epochs);
  read_field(j, "lr", cfg.train.lr);
  read_field(j, "batch_size", cfg.train.batch_size);
  read_field(j, "beta1", cfg.train.beta1);
  read_field(j, "beta2", cfg.train.beta2);
  read_field(j, "eps", cfg.train.eps);
  read_field(j, "window", cfg.hyper.window);
  read_field(j, "embed_dim", cfg.hyper.embed);
  read_field(j, "state_dim", cfg.hyper.state);
  read_field(j, "ffn_hidden", cfg.hyper.ffn_hidden);
  read_field(j, "layers", cfg.hyper.layers);
  read_field(j, "cheb_order", cfg.hyper.cheb_order);
  read_field(j, "node_dim", cfg.hyper.node_dim);
  read_field(j, "conv_width", cfg.hyper.conv_width);
  read_field(j, "delta_rank", cfg.hyper.delta_rank);
  if (!delta_rank_given) cfg.hyper.delta_rank = default_delta_rank(cfg.hyper.embed);
  read_field(j, "train_frac", cfg.split.train_frac);
  read_field(j, "val_frac", cfg.split.val_frac);
  read_field(j, "test_frac", cfg.split.test_frac);
  if (cfg.hyper.window == 0) throw ConfigError("config field 'window' must be positive");
  return cfg;
}

std::string resolved_config_json(const RunConfig& cfg) {
  json j;
  j["data"] = cfg.data;
  j["out"] = cfg.out;
  j["seed"] = cfg.train.seed;
  j["epochs"] = cfg.train.epochs;
  j["lr"] = cfg.train.lr;
  j["batch_size"] = cfg.train.batch_size;
  j["beta1"] = cfg.train.beta1;
  j["beta2"] = cfg.train.beta2;
  j["eps"] = cfg.train.eps;
  j["window"] = cfg.hyper.window;
  j["embed_dim"] = cfg.hyper.embed;
  j["state_dim"] = cfg.hyper.state;
  j["ffn_hidden"] = cfg.hyper.ffn_hidden;
  j["layers"] = cfg.hyper.layers;
  j["cheb_order"] = cfg.hyper.cheb_order;
  j["node_dim"] = cfg.hyper.node_dim;
  j["delta_rank"] = cfg.hyper.delta_rank;
  j["conv_width"] = cfg.hyper.conv_width;
  j["train_frac"] = cfg.split.train_frac;
  j["val_frac"] = cfg.split.val_frac;
  j["test_frac"] = cfg.split.test_frac;
  return j.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SAMBA stock-return forecaster"};
  app.require_subcommand(1);

  std::string config, checkpoint, data, out_dir, date;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::string> train_out;

  auto* train_cmd = app.add_subcommand("train", "train a model from a JSON config");
  train_cmd->add_option("--config", config, "flat JSON run config")->required();
  train_cmd->add_option("--seed", seed, "override the seed");
  train_cmd->add_option("--epochs", epochs, "override the epoch count");
  train_cmd->add_option("--lr", lr, "override the learning rate");
  train_cmd->add_option("--out", train_out, "override the output directory");

  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on the test split");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--data", data)->required();
  eval_cmd->add_option("--out", out_dir, "defaults to the checkpoint directory");

  auto* predict_cmd = app.add_subcommand("predict", "predict the return ratio of one day");
  predict_cmd->add_option("--checkpoint", checkpoint)->required();
  predict_cmd->add_option("--data", data)->required();
  predict_cmd->add_option("--date", date, "target day, YYYY-MM-DD")->required();

  auto* graph_cmd = app.add_subcommand("export-graph", "write the learned feature adjacency");
  graph_cmd->add_option("--checkpoint", checkpoint)->required();
  graph_cmd->add_option("--out", out_dir, "defaults to the checkpoint directory");

  std::vector<std::string> argv_store{"samba"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(config, seed, epochs, lr, train_out, out);
    if (*eval_cmd) return cmd_eval(checkpoint, data, out_dir, out);
    if (*predict_cmd) return cmd_predict(checkpoint, data, date, out);
    if (*graph_cmd) return cmd_export_graph(checkpoint, out_dir, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InsufficientDataError& e) {
    err << "insufficient data: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace samba::cli
