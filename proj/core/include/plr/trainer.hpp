#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plr/dataset.hpp"
#include "plr/losses.hpp"
#include "plr/model.hpp"

namespace plr {

/// What the per-epoch validation trace measures.
///   PartialMin: mean over examples of min_{y in S} (f(x) - y)^2 — computable
///               from candidate sets alone (no label leak).
///   TrueMse:    mean squared error against the held-out true labels.
enum class ValidationMetric { PartialMin, TrueMse };

std::string validation_metric_name(ValidationMetric metric);
ValidationMetric parse_validation_metric(std::string_view name);

struct TrainConfig {
  ModelKind model_kind = ModelKind::Mlp;
  Aggregation aggregation = Aggregation::avg_loss();
  PointwiseLoss loss = PointwiseLoss::mse();
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t epochs = 1000;
  std::uint64_t seed = 0;
  ValidationMetric validation_metric = ValidationMetric::PartialMin;
};

struct FitOutcome {
  RegressionModel model;
  std::vector<double> train_loss_trace;   // one entry per epoch
  std::vector<double> validation_trace;   // one entry per epoch
  double wall_seconds = 0.0;
};

/// Minibatch Adam on the configured candidate-set loss. Batches are formed
/// by a per-epoch reshuffle drawn from the config seed; the last batch may
/// be short; gradients are batch means. Deterministic: identical
/// (config, data) gives a bitwise-identical model. Throws DivergenceError
/// (with epoch/batch) when the loss becomes non-finite or runs away.
FitOutcome fit(const TrainConfig& config, const PartialDataset& train,
               const PartialDataset& validation);

enum class EvalTarget { TrueLabels, MinCandidate };

/// Mean squared error of the model over the dataset, against the true labels
/// or against the closest candidate per example.
double evaluate(const RegressionModel& model, const PartialDataset& ds,
                EvalTarget target);

struct SelectionOutcome {
  std::size_t best_index = 0;
  TrainConfig config;
  FitOutcome outcome;
  std::vector<std::string> failures;   // one note per diverged config
};

/// Fit every config and keep the one with the lowest final validation
/// metric; ties go to the earliest grid entry. Diverged configs are recorded
/// and skipped. Throws SelectionError when every config fails.
SelectionOutcome select(std::span<const TrainConfig> grid, const PartialDataset& train,
                        const PartialDataset& validation);

}  // namespace plr
