#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plr/losses.hpp"
#include "plr/model.hpp"
#include "plr/trainer.hpp"

namespace plr {

/// Parse a method token: "supervised", "avgl-mse", "avgl-mae", "avgl-huber",
/// "avgv-mse", "avgv-mae", "avgv-huber", "ident", "pident".
struct MethodSpec {
  std::string token;
  Aggregation aggregation;
  PointwiseLoss loss;
};
MethodSpec parse_method(std::string_view token);

/// Output root: --out if given, else $PLR_BENCH_OUT, else ./plr_out.
std::filesystem::path default_output_root();

struct CorruptOptions {
  std::filesystem::path data;
  std::filesystem::path schema;
  std::size_t num_false = 0;
  std::uint64_t seed = 1;
  std::filesystem::path out;   // empty -> <root>/corrupt-<stem>-k<K>-seed<S>
};

struct CorruptOutputs {
  std::filesystem::path out_dir;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  std::size_t test_size = 0;
  double span_lo = 0.0;
  double span_hi = 0.0;
};

/// Load + split + preprocess + corrupt; writes train/validation/test JSONL
/// and a run manifest.
CorruptOutputs run_corrupt(const CorruptOptions& opt, std::ostream& log);

struct TrainOptions {
  std::filesystem::path data;   // directory produced by run_corrupt
  std::string method = "supervised";
  std::string loss = "mse";     // pointwise loss for avgl/avgv/supervised
  std::string model = "mlp";
  double learning_rate = 1e-3;
  double beta1 = 0.5;
  double beta2 = 100.0;
  double huber_delta = 1.0;
  std::uint64_t seed = 1;
  std::size_t epochs = 1000;
  std::size_t batch_size = 256;
  std::string validation_metric = "partial-min";
  bool save_model = false;
  std::filesystem::path out;
};

struct TrainOutputs {
  std::filesystem::path out_dir;
  double test_mse = 0.0;
  double validation_metric = 0.0;
  FitOutcome outcome;
};

/// One fit on previously corrupted data; writes fit.json (traces, config
/// echo, final metrics) plus an optional model checkpoint.
TrainOutputs run_train(const TrainOptions& opt, std::ostream& log);

struct BenchOptions {
  std::vector<std::filesystem::path> data;     // CSV files
  std::vector<std::filesystem::path> schemas;  // paired with data by position
  std::vector<std::size_t> num_false;
  std::vector<std::string> methods;
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string model = "mlp";
  std::optional<double> learning_rate;   // pinned when set, else {0.01, 0.001}
  double beta1 = 0.5;
  std::optional<double> beta2;           // pinned when set, else the 5-point grid
  std::optional<double> huber_delta;     // pinned when set, else {1, 5}
  std::size_t epochs = 1000;
  std::size_t batch_size = 256;
  std::string validation_metric = "partial-min";
  std::filesystem::path out;             // root; the run dir is <out>/<config hash>
};

struct BenchOutputs {
  int exit_code = 0;
  std::filesystem::path run_dir;
  std::size_t trials_run = 0;
  std::size_t trials_skipped = 0;
  std::size_t trials_failed = 0;
};

/// Full grid of (dataset x |S| x method x repeat) trials with per-trial
/// hyperparameter selection, an append-only results store, and rendered
/// reports. Resumable: trials already in the store are skipped. The store is
/// written in trial order regardless of worker count.
BenchOutputs run_bench(const BenchOptions& opt, std::ostream& log);

struct ScalingOptions {
  std::filesystem::path data;
  std::filesystem::path schema;
  std::string method = "ident";
  std::size_t num_false = 4;
  std::vector<double> fractions;
  std::size_t repeats = 5;
  std::uint64_t seed = 1;
  std::string model = "mlp";
  std::optional<double> learning_rate;
  double beta1 = 0.5;
  std::optional<double> beta2;
  std::optional<double> huber_delta;
  std::size_t epochs = 1000;
  std::size_t batch_size = 256;
  std::string validation_metric = "partial-min";
  std::filesystem::path out;
};

struct ScalingOutputs {
  std::filesystem::path run_dir;
  std::vector<double> fractions;
  std::vector<double> mean_mse;
  std::vector<double> stddev;
};

/// Learning-curve run: per fraction, subsample the corrupted train split,
/// fit, evaluate on the untouched test split; emits curve.csv + curve.svg.
ScalingOutputs run_scaling(const ScalingOptions& opt, std::ostream& log);

/// Re-execute the command recorded in a manifest, optionally into a
/// different output location. Reproduces all non-timestamp output bytes.
int run_replay(const std::filesystem::path& manifest,
               const std::optional<std::filesystem::path>& out_override,
               std::ostream& log);

}  // namespace plr
