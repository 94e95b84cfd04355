#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "plr/error.hpp"
#include "plr/runner.hpp"

namespace {

// Exit codes: 0 ok, 2 input error, 3 divergence, 4 bench cell failure.
constexpr int kExitInput = 2;
constexpr int kExitDivergence = 3;

int dispatch(int argc, char** argv) {
  CLI::App app{"partial-label regression toolkit"};
  app.require_subcommand(1);

  plr::CorruptOptions corrupt_opt;
  std::string corrupt_out;
  CLI::App* corrupt = app.add_subcommand(
      "corrupt", "split a CSV dataset and attach candidate label sets");
  corrupt->add_option("--data", corrupt_opt.data, "input CSV file")->required();
  corrupt->add_option("--schema", corrupt_opt.schema, "dataset schema JSON")->required();
  corrupt->add_option("--num-false", corrupt_opt.num_false,
                      "false labels per candidate set")->required();
  corrupt->add_option("--seed", corrupt_opt.seed, "base seed")->default_val(1);
  corrupt->add_option("--out", corrupt_out, "output directory");

  plr::TrainOptions train_opt;
  std::string train_out;
  CLI::App* train = app.add_subcommand("train", "fit one model on corrupted data");
  train->add_option("--data", train_opt.data, "directory written by `corrupt`")->required();
  train->add_option("--method", train_opt.method,
                    "supervised | avgl | avgv | ident | pident")->required();
  train->add_option("--loss", train_opt.loss, "mse | mae | huber")->default_val("mse");
  train->add_option("--model", train_opt.model, "linear | mlp")->default_val("mlp");
  train->add_option("--lr", train_opt.learning_rate, "learning rate")->default_val(1e-3);
  train->add_option("--beta1", train_opt.beta1, "weighting exponent")->default_val(0.5);
  train->add_option("--beta2", train_opt.beta2, "weighting scale")->default_val(100.0);
  train->add_option("--huber-delta", train_opt.huber_delta, "Huber threshold")
      ->default_val(1.0);
  train->add_option("--seed", train_opt.seed, "seed")->default_val(1);
  train->add_option("--epochs", train_opt.epochs, "training epochs")->default_val(1000);
  train->add_option("--batch-size", train_opt.batch_size, "minibatch size")->default_val(256);
  train->add_option("--validation-metric", train_opt.validation_metric,
                    "partial-min | true-mse")->default_val("partial-min");
  train->add_flag("--save", train_opt.save_model, "write a model checkpoint");
  train->add_option("--out", train_out, "output directory");

  plr::BenchOptions bench_opt;
  std::string bench_out;
  std::optional<double> bench_lr, bench_beta2, bench_delta;
  CLI::App* bench = app.add_subcommand(
      "bench", "run a (dataset x |S| x method x repeat) benchmark grid");
  bench->add_option("--data", bench_opt.data, "input CSV files")->required();
  bench->add_option("--schema", bench_opt.schemas, "schema JSON per data file")->required();
  bench->add_option("--num-false", bench_opt.num_false, "false-label counts")->required();
  bench->add_option("--method", bench_opt.methods,
                    "method tokens (supervised, avgl-mse, ..., ident, pident)")->required();
  bench->add_option("--repeats", bench_opt.repeats, "repetitions per cell")->default_val(10);
  bench->add_option("--seed", bench_opt.seed, "base seed")->default_val(1);
  bench->add_option("--workers", bench_opt.workers, "parallel trials")->default_val(1);
  bench->add_option("--model", bench_opt.model, "linear | mlp")->default_val("mlp");
  bench->add_option("--lr", bench_lr, "pin the learning rate (default: grid)");
  bench->add_option("--beta1", bench_opt.beta1, "weighting exponent")->default_val(0.5);
  bench->add_option("--beta2", bench_beta2, "pin the weighting scale (default: grid)");
  bench->add_option("--huber-delta", bench_delta, "pin the Huber threshold (default: grid)");
  bench->add_option("--epochs", bench_opt.epochs, "training epochs")->default_val(1000);
  bench->add_option("--batch-size", bench_opt.batch_size, "minibatch size")->default_val(256);
  bench->add_option("--validation-metric", bench_opt.validation_metric,
                    "partial-min | true-mse")->default_val("partial-min");
  bench->add_option("--out", bench_out, "output root");

  plr::ScalingOptions scaling_opt;
  std::string scaling_out;
  std::optional<double> scaling_lr, scaling_beta2, scaling_delta;
  CLI::App* scaling = app.add_subcommand(
      "scaling", "test error as the corrupted training set grows");
  scaling->add_option("--data", scaling_opt.data, "input CSV file")->required();
  scaling->add_option("--schema", scaling_opt.schema, "dataset schema JSON")->required();
  scaling->add_option("--method", scaling_opt.method, "method token")->default_val("ident");
  scaling->add_option("--num-false", scaling_opt.num_false,
                      "false labels per candidate set")->default_val(4);
  scaling->add_option("--fractions", scaling_opt.fractions,
                      "training fractions in (0, 1]")->required();
  scaling->add_option("--repeats", scaling_opt.repeats, "repetitions")->default_val(5);
  scaling->add_option("--seed", scaling_opt.seed, "base seed")->default_val(1);
  scaling->add_option("--model", scaling_opt.model, "linear | mlp")->default_val("mlp");
  scaling->add_option("--lr", scaling_lr, "pin the learning rate (default: grid)");
  scaling->add_option("--beta1", scaling_opt.beta1, "weighting exponent")->default_val(0.5);
  scaling->add_option("--beta2", scaling_beta2, "pin the weighting scale");
  scaling->add_option("--huber-delta", scaling_delta, "pin the Huber threshold");
  scaling->add_option("--epochs", scaling_opt.epochs, "training epochs")->default_val(1000);
  scaling->add_option("--batch-size", scaling_opt.batch_size, "minibatch size")
      ->default_val(256);
  scaling->add_option("--validation-metric", scaling_opt.validation_metric,
                      "partial-min | true-mse")->default_val("partial-min");
  scaling->add_option("--out", scaling_out, "output root");

  std::string replay_manifest;
  std::string replay_out;
  CLI::App* replay = app.add_subcommand("replay", "re-run the command in a manifest");
  replay->add_option("manifest", replay_manifest, "manifest.json path")->required();
  replay->add_option("--out", replay_out, "override the output location");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (corrupt->parsed()) {
    corrupt_opt.out = corrupt_out;
    plr::run_corrupt(corrupt_opt, std::cout);
    return 0;
  }
  if (train->parsed()) {
    train_opt.out = train_out;
    plr::run_train(train_opt, std::cout);
    return 0;
  }
  if (bench->parsed()) {
    bench_opt.out = bench_out;
    bench_opt.learning_rate = bench_lr;
    bench_opt.beta2 = bench_beta2;
    bench_opt.huber_delta = bench_delta;
    return plr::run_bench(bench_opt, std::cout).exit_code;
  }
  if (scaling->parsed()) {
    scaling_opt.out = scaling_out;
    scaling_opt.learning_rate = scaling_lr;
    scaling_opt.beta2 = scaling_beta2;
    scaling_opt.huber_delta = scaling_delta;
    plr::run_scaling(scaling_opt, std::cout);
    return 0;
  }
  if (replay->parsed()) {
    std::optional<std::filesystem::path> out;
    if (!replay_out.empty()) out = replay_out;
    return plr::run_replay(replay_manifest, out, std::cout);
  }
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const plr::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const plr::SelectionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const plr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
