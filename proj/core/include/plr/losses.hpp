#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plr {

enum class LossKind { Mse, Mae, Huber };

/// Pointwise regression loss. Huber carries its threshold delta (> 0).
struct PointwiseLoss {
  LossKind kind = LossKind::Mse;
  double huber_delta = 1.0;

  static PointwiseLoss mse() { return {LossKind::Mse, 1.0}; }
  static PointwiseLoss mae() { return {LossKind::Mae, 1.0}; }
  static PointwiseLoss huber(double delta);

  std::string name() const;
};

/// A loss value together with its derivative w.r.t. the prediction.
struct LossValue {
  double value = 0.0;
  double d_pred = 0.0;
};

/// Evaluate the pointwise loss and its derivative.
///   MSE:   (p-y)^2,            d = 2(p-y)
///   MAE:   |p-y|,              d = sign(p-y), 0 at p = y
///   Huber: r^2/2 for |r|<=delta, else delta*(|r| - delta/2); C1 at the knee
LossValue pointwise(const PointwiseLoss& loss, double pred, double y);

enum class AggregationKind { Supervised, AvgLoss, AvgValue, MinLoss, Weighted };

/// How the pointwise losses of a candidate set combine into one training
/// loss. Weighted carries the score exponent beta1 (> 0) and the score
/// scale beta2 (>= 0).
struct Aggregation {
  AggregationKind kind = AggregationKind::Supervised;
  double beta1 = 0.5;
  double beta2 = 0.0;

  static Aggregation supervised() { return {AggregationKind::Supervised, 0.5, 0.0}; }
  static Aggregation avg_loss() { return {AggregationKind::AvgLoss, 0.5, 0.0}; }
  static Aggregation avg_value() { return {AggregationKind::AvgValue, 0.5, 0.0}; }
  static Aggregation min_loss() { return {AggregationKind::MinLoss, 0.5, 0.0}; }
  static Aggregation weighted(double beta1, double beta2);

  std::string name() const;
};

/// Non-empty set of real-valued candidate labels attached to one example.
class CandidateSet {
 public:
  explicit CandidateSet(std::vector<double> labels);

  const std::vector<double>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<double> labels_;
};

/// Losses below this floor are clamped before the pow(., -beta1) score;
/// the score is singular at zero loss.
inline constexpr double kWeightLossFloor = 1e-8;

/// Softmax weights over candidate scores beta2 * max(loss, floor)^(-beta1).
/// Smaller losses get larger weights; beta2 = 0 gives exactly uniform
/// weights. Weights are non-negative and sum to 1. Throws DomainError on an
/// empty vector or a negative loss.
std::vector<double> candidate_weights(std::span<const double> loss_values,
                                      double beta1, double beta2);

/// Training loss of one prediction against a candidate set.
///
/// Supervised requires y_true and ignores the candidates; the other
/// aggregations ignore y_true. For Weighted, the weights are recomputed from
/// the current losses and treated as constants in the derivative. MinLoss
/// breaks ties toward the lowest candidate index, and its derivative flows
/// only through the argmin candidate.
LossValue plr_loss(const Aggregation& agg, const PointwiseLoss& loss, double pred,
                   const CandidateSet& candidates,
                   std::optional<double> y_true = std::nullopt);

}  // namespace plr
