#include "plr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "plr/error.hpp"

namespace plr {

namespace {

// Adam's normalized steps keep even wildly mis-set learning rates at finite
// loss values for a very long time; a run whose loss grows this much over
// its starting point is treated as diverged alongside NaN/Inf.
constexpr double kRunawayFactor = 1e9;

double validation_value(const RegressionModel& model, const PartialDataset& validation,
                        ValidationMetric metric) {
  return evaluate(model, validation,
                  metric == ValidationMetric::PartialMin ? EvalTarget::MinCandidate
                                                         : EvalTarget::TrueLabels);
}

}  // namespace

std::string validation_metric_name(ValidationMetric metric) {
  return metric == ValidationMetric::PartialMin ? "partial-min" : "true-mse";
}

ValidationMetric parse_validation_metric(std::string_view name) {
  if (name == "partial-min") return ValidationMetric::PartialMin;
  if (name == "true-mse") return ValidationMetric::TrueMse;
  throw DomainError("unknown validation metric '" + std::string(name) + "'");
}

FitOutcome fit(const TrainConfig& config, const PartialDataset& train,
               const PartialDataset& validation) {
  if (!(config.learning_rate > 0.0)) throw DomainError("fit: learning rate must be > 0");
  if (config.batch_size == 0) throw DomainError("fit: batch size must be >= 1");
  if (config.epochs == 0) throw DomainError("fit: epochs must be >= 1");
  train.validate();
  validation.validate();
  if (train.size() == 0) throw DomainError("fit: empty training set");
  if (validation.X.cols() != train.X.cols()) {
    throw ShapeError("fit: validation has " + std::to_string(validation.X.cols()) +
                     " features, train has " + std::to_string(train.X.cols()));
  }

  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = train.size();
  const std::size_t d = train.X.cols();

  Rng root(config.seed);
  Rng init_rng = root.derive(0);
  Rng shuffle_rng = root.derive(1);

  RegressionModel model = RegressionModel::init(config.model_kind, d, init_rng);
  AdamState adam(model, config.learning_rate);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  FitOutcome out{std::move(model), {}, {}, 0.0};
  out.train_loss_trace.reserve(config.epochs);
  out.validation_trace.reserve(config.epochs);

  Matrix batch_X;
  std::vector<double> upstream;
  double baseline_loss = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss_sum = 0.0;

    const std::size_t num_batches = (n + config.batch_size - 1) / config.batch_size;
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t bn = std::min(config.batch_size, n - begin);

      if (batch_X.rows() != bn || batch_X.cols() != d) batch_X = Matrix(bn, d);
      for (std::size_t r = 0; r < bn; ++r) {
        const std::size_t i = order[begin + r];
        std::copy(train.X.row(i).begin(), train.X.row(i).end(), batch_X.row(r).begin());
      }

      const std::vector<double> preds = out.model.forward_batch(batch_X);

      upstream.assign(bn, 0.0);
      double batch_loss_sum = 0.0;
      const double inv_bn = 1.0 / static_cast<double>(bn);
      for (std::size_t r = 0; r < bn; ++r) {
        const std::size_t i = order[begin + r];
        LossValue lv;
        try {
          lv = plr_loss(config.aggregation, config.loss, preds[r], train.candidates[i],
                        train.y_true[i]);
        } catch (const NonFiniteError& e) {
          throw DivergenceError("fit: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(b) + " (" + e.what() + ")",
                                epoch, b);
        }
        batch_loss_sum += lv.value;
        upstream[r] = lv.d_pred * inv_bn;   // batch-mean gradient convention
      }

      const double batch_loss = batch_loss_sum * inv_bn;
      if (std::isnan(baseline_loss)) baseline_loss = batch_loss;
      if (!std::isfinite(batch_loss) ||
          batch_loss > (std::abs(baseline_loss) + 1.0) * kRunawayFactor) {
        throw DivergenceError("fit: loss " + std::to_string(batch_loss) +
                                  " diverged at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(b),
                              epoch, b);
      }

      Gradients grads = backward_batch(out.model, batch_X, upstream);
      try {
        adam_step(out.model, grads, adam);
      } catch (const NonFiniteError& e) {
        throw DivergenceError("fit: " + std::string(e.what()) + " at epoch " +
                                  std::to_string(epoch) + ", batch " + std::to_string(b),
                              epoch, b);
      }
      epoch_loss_sum += batch_loss_sum;
    }

    out.train_loss_trace.push_back(epoch_loss_sum / static_cast<double>(n));
    out.validation_trace.push_back(
        validation_value(out.model, validation, config.validation_metric));
  }

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

double evaluate(const RegressionModel& model, const PartialDataset& ds, EvalTarget target) {
  if (ds.size() == 0) throw DomainError("evaluate: empty dataset");
  const std::vector<double> preds = model.forward_batch(ds.X);
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (target == EvalTarget::TrueLabels) {
      const double r = preds[i] - ds.y_true[i];
      sum += r * r;
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (double y : ds.candidates[i].labels()) {
        const double r = preds[i] - y;
        best = std::min(best, r * r);
      }
      sum += best;
    }
  }
  return sum / static_cast<double>(ds.size());
}

SelectionOutcome select(std::span<const TrainConfig> grid, const PartialDataset& train,
                        const PartialDataset& validation) {
  if (grid.empty()) throw DomainError("select: empty config grid");
  std::optional<SelectionOutcome> best;
  std::vector<std::string> failures;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    try {
      FitOutcome outcome = fit(grid[g], train, validation);
      const double score = outcome.validation_trace.back();
      if (!best || score < best->outcome.validation_trace.back()) {
        best = SelectionOutcome{g, grid[g], std::move(outcome), {}};
      }
    } catch (const DivergenceError& e) {
      failures.push_back("config " + std::to_string(g) + ": " + e.what());
    }
  }
  if (!best) {
    std::string msg = "select: every configuration diverged";
    for (const std::string& f : failures) msg += "\n  " + f;
    throw SelectionError(msg);
  }
  best->failures = std::move(failures);
  return *best;
}

}  // namespace plr
