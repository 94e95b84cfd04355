#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "plr/matrix.hpp"
#include "plr/rng.hpp"

namespace plr {

enum class ModelKind { Linear, Mlp };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// One affine layer: weight is (out x in), bias has length out.
struct Layer {
  Matrix weight;
  std::vector<double> bias;
};

/// Regression model f: R^d -> R. Linear is a single affine layer; Mlp is the
/// fixed d-20-30-10-1 stack with ReLU between hidden layers and an identity
/// output.
class RegressionModel {
 public:
  static RegressionModel init(ModelKind kind, std::size_t input_dim, Rng& rng);

  /// Assemble a model from explicit layers (checkpoint loading, tests).
  /// Validates that consecutive layer shapes chain and the output is scalar.
  static RegressionModel from_layers(ModelKind kind, std::vector<Layer> layers);

  ModelKind kind() const { return kind_; }
  std::size_t input_dim() const { return layers_.front().weight.cols(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::size_t parameter_count() const;

  /// One prediction per row of X.
  std::vector<double> forward_batch(const Matrix& X) const;
  double forward_one(std::span<const double> x) const;

  std::string to_json_string() const;
  static RegressionModel from_json_string(const std::string& text);

 private:
  RegressionModel(ModelKind kind, std::vector<Layer> layers)
      : kind_(kind), layers_(std::move(layers)) {}

  ModelKind kind_;
  std::vector<Layer> layers_;
};

/// Parameter-shaped gradient container.
struct Gradients {
  std::vector<Layer> layers;
};

/// Gradient of sum_i upstream[i] * f(x_i) w.r.t. every parameter.
/// The ReLU subgradient at exactly 0 is taken as 0.
Gradients backward_batch(const RegressionModel& model, const Matrix& X,
                         std::span<const double> upstream);

/// Adam optimizer state (first/second moments, step count).
struct AdamState {
  AdamState(const RegressionModel& model, double learning_rate);

  double learning_rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<Layer> m;
  std::vector<Layer> v;
};

/// One Adam update with bias correction, in place. Throws NonFiniteError
/// (naming the offending parameter) when a gradient entry is NaN/Inf.
void adam_step(RegressionModel& model, const Gradients& grads, AdamState& state);

void save_checkpoint(const RegressionModel& model, const std::filesystem::path& path);
RegressionModel load_checkpoint(const std::filesystem::path& path);

}  // namespace plr
