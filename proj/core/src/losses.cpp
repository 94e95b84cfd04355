#include "plr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plr/error.hpp"

namespace plr {

PointwiseLoss PointwiseLoss::huber(double delta) {
  if (!(delta > 0.0)) {
    throw DomainError("huber: delta must be > 0, got " + std::to_string(delta));
  }
  return {LossKind::Huber, delta};
}

std::string PointwiseLoss::name() const {
  switch (kind) {
    case LossKind::Mse: return "mse";
    case LossKind::Mae: return "mae";
    case LossKind::Huber: return "huber";
  }
  return "?";
}

Aggregation Aggregation::weighted(double beta1, double beta2) {
  if (!(beta1 > 0.0)) {
    throw DomainError("weighted aggregation: beta1 must be > 0, got " + std::to_string(beta1));
  }
  if (beta2 < 0.0) {
    throw DomainError("weighted aggregation: beta2 must be >= 0, got " + std::to_string(beta2));
  }
  return {AggregationKind::Weighted, beta1, beta2};
}

std::string Aggregation::name() const {
  switch (kind) {
    case AggregationKind::Supervised: return "supervised";
    case AggregationKind::AvgLoss: return "avg-loss";
    case AggregationKind::AvgValue: return "avg-value";
    case AggregationKind::MinLoss: return "min-loss";
    case AggregationKind::Weighted: return "weighted";
  }
  return "?";
}

CandidateSet::CandidateSet(std::vector<double> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw DomainError("candidate set must be non-empty");
  for (double y : labels_) {
    if (!std::isfinite(y)) throw NonFiniteError("candidate set contains a non-finite label");
  }
}

LossValue pointwise(const PointwiseLoss& loss, double pred, double y) {
  if (!std::isfinite(pred) || !std::isfinite(y)) {
    throw NonFiniteError("pointwise loss: non-finite input (pred=" + std::to_string(pred) +
                         ", y=" + std::to_string(y) + ")");
  }
  const double r = pred - y;
  switch (loss.kind) {
    case LossKind::Mse:
      return {r * r, 2.0 * r};
    case LossKind::Mae:
      return {std::abs(r), r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)};
    case LossKind::Huber: {
      const double d = loss.huber_delta;
      if (!(d > 0.0)) throw DomainError("huber: delta must be > 0");
      const double ar = std::abs(r);
      if (ar <= d) return {0.5 * r * r, r};
      return {d * (ar - 0.5 * d), r > 0.0 ? d : -d};
    }
  }
  throw DomainError("unknown pointwise loss kind");
}

std::vector<double> candidate_weights(std::span<const double> loss_values,
                                      double beta1, double beta2) {
  if (loss_values.empty()) throw DomainError("candidate_weights: empty loss vector");
  if (beta2 < 0.0) throw DomainError("candidate_weights: beta2 must be >= 0");

  const std::size_t n = loss_values.size();
  std::vector<double> score(n);
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(loss_values[i] >= 0.0)) {
      throw DomainError("candidate_weights: loss at index " + std::to_string(i) +
                        " is negative or NaN");
    }
    score[i] = beta2 * std::pow(std::max(loss_values[i], kWeightLossFloor), -beta1);
    max_score = std::max(max_score, score[i]);
  }
  // Subtract the max score before exponentiating; raw scores can reach
  // exp(beta2 * floor^(-beta1)) otherwise.
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(score[i] - max_score);
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return w;
}

LossValue plr_loss(const Aggregation& agg, const PointwiseLoss& loss, double pred,
                   const CandidateSet& candidates, std::optional<double> y_true) {
  const std::vector<double>& ys = candidates.labels();
  switch (agg.kind) {
    case AggregationKind::Supervised: {
      if (!y_true.has_value()) {
        throw DomainError("supervised loss requires the true label");
      }
      return pointwise(loss, pred, *y_true);
    }
    case AggregationKind::AvgLoss: {
      const double inv = 1.0 / static_cast<double>(ys.size());
      LossValue acc;
      for (double y : ys) {
        const LossValue lv = pointwise(loss, pred, y);
        acc.value += inv * lv.value;
        acc.d_pred += inv * lv.d_pred;
      }
      return acc;
    }
    case AggregationKind::AvgValue: {
      double m = 0.0;
      for (double y : ys) m += y;
      m /= static_cast<double>(ys.size());
      return pointwise(loss, pred, m);
    }
    case AggregationKind::MinLoss: {
      LossValue best = pointwise(loss, pred, ys[0]);
      for (std::size_t i = 1; i < ys.size(); ++i) {
        const LossValue lv = pointwise(loss, pred, ys[i]);
        if (lv.value < best.value) best = lv;   // ties keep the lowest index
      }
      return best;
    }
    case AggregationKind::Weighted: {
      // Weights come from the current losses and are constants in the
      // derivative; only the pointwise terms are differentiated.
      std::vector<double> values(ys.size());
      std::vector<double> derivs(ys.size());
      for (std::size_t i = 0; i < ys.size(); ++i) {
        const LossValue lv = pointwise(loss, pred, ys[i]);
        values[i] = lv.value;
        derivs[i] = lv.d_pred;
      }
      const std::vector<double> w = candidate_weights(values, agg.beta1, agg.beta2);
      LossValue acc;
      for (std::size_t i = 0; i < ys.size(); ++i) {
        acc.value += w[i] * values[i];
        acc.d_pred += w[i] * derivs[i];
      }
      return acc;
    }
  }
  throw DomainError("unknown aggregation kind");
}

}  // namespace plr
