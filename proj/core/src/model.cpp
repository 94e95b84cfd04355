#include "plr/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "plr/error.hpp"

namespace plr {

namespace {

constexpr std::array<std::size_t, 3> kMlpHidden = {20, 30, 10};

void check_chain(const std::vector<Layer>& layers) {
  if (layers.empty()) throw ShapeError("model: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& L = layers[l];
    if (L.weight.rows() == 0 || L.weight.cols() == 0) {
      throw ShapeError("model: layer " + std::to_string(l) + " has an empty weight");
    }
    if (L.bias.size() != L.weight.rows()) {
      throw ShapeError("model: layer " + std::to_string(l) + " bias length " +
                       std::to_string(L.bias.size()) + " != weight rows " +
                       std::to_string(L.weight.rows()));
    }
    if (l > 0 && layers[l - 1].weight.rows() != L.weight.cols()) {
      throw ShapeError("model: layer " + std::to_string(l) + " expects " +
                       std::to_string(L.weight.cols()) + " inputs but layer " +
                       std::to_string(l - 1) + " outputs " +
                       std::to_string(layers[l - 1].weight.rows()));
    }
  }
  if (layers.back().weight.rows() != 1) {
    throw ShapeError("model: output layer must have a single unit");
  }
}

std::vector<Layer> zeros_like(const std::vector<Layer>& layers) {
  std::vector<Layer> out;
  out.reserve(layers.size());
  for (const Layer& L : layers) {
    out.push_back({Matrix(L.weight.rows(), L.weight.cols(), 0.0),
                   std::vector<double>(L.bias.size(), 0.0)});
  }
  return out;
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::Linear ? "linear" : "mlp";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "mlp") return ModelKind::Mlp;
  throw DomainError("unknown model kind '" + std::string(name) + "'");
}

RegressionModel RegressionModel::init(ModelKind kind, std::size_t input_dim, Rng& rng) {
  if (input_dim == 0) throw DomainError("model init: input_dim must be >= 1");
  std::vector<std::size_t> widths{input_dim};
  if (kind == ModelKind::Mlp) {
    widths.insert(widths.end(), kMlpHidden.begin(), kMlpHidden.end());
  }
  widths.push_back(1);

  std::vector<Layer> layers;
  layers.reserve(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    // Fan-based uniform init; biases start at zero.
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (std::size_t i = 0; i < out; ++i) {
      for (std::size_t j = 0; j < in; ++j) layer.weight(i, j) = rng.uniform(-limit, limit);
    }
    layers.push_back(std::move(layer));
  }
  return RegressionModel(kind, std::move(layers));
}

RegressionModel RegressionModel::from_layers(ModelKind kind, std::vector<Layer> layers) {
  check_chain(layers);
  if (kind == ModelKind::Linear && layers.size() != 1) {
    throw ShapeError("linear model must have exactly one layer, got " +
                     std::to_string(layers.size()));
  }
  return RegressionModel(kind, std::move(layers));
}

std::size_t RegressionModel::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& L : layers_) {
    n += L.weight.rows() * L.weight.cols() + L.bias.size();
  }
  return n;
}

std::vector<double> RegressionModel::forward_batch(const Matrix& X) const {
  if (X.cols() != input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(X.cols()) +
                     " columns, model expects " + std::to_string(input_dim()));
  }
  const std::size_t n = X.rows();
  Matrix cur(n, X.cols());
  std::copy(X.data(), X.data() + n * X.cols(), cur.data());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    const std::size_t out_w = L.weight.rows();
    const std::size_t in_w = L.weight.cols();
    Matrix next(n, out_w);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = cur.data() + i * in_w;
      double* ni = next.data() + i * out_w;
      for (std::size_t o = 0; o < out_w; ++o) {
        const double* wo = L.weight.data() + o * in_w;
        double acc = L.bias[o];
        for (std::size_t k = 0; k < in_w; ++k) acc += wo[k] * xi[k];
        ni[o] = acc;
      }
    }
    if (l + 1 < layers_.size()) {
      for (std::size_t i = 0; i < n * out_w; ++i) {
        if (next.data()[i] < 0.0) next.data()[i] = 0.0;
      }
    }
    cur = std::move(next);
  }
  std::vector<double> preds(n);
  for (std::size_t i = 0; i < n; ++i) preds[i] = cur(i, 0);
  return preds;
}

double RegressionModel::forward_one(std::span<const double> x) const {
  Matrix X(1, x.size());
  std::copy(x.begin(), x.end(), X.data());
  return forward_batch(X)[0];
}

Gradients backward_batch(const RegressionModel& model, const Matrix& X,
                         std::span<const double> upstream) {
  if (upstream.size() != X.rows()) {
    throw ShapeError("backward: upstream length " + std::to_string(upstream.size()) +
                     " != batch rows " + std::to_string(X.rows()));
  }
  if (X.cols() != model.input_dim()) {
    throw ShapeError("backward: input has " + std::to_string(X.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  const std::vector<Layer>& layers = model.layers();
  const std::size_t n = X.rows();
  const std::size_t num_layers = layers.size();

  // Forward pass caching post-activations. A hidden unit's post-activation
  // is positive exactly when its pre-activation is, which is all the ReLU
  // backward pass needs (derivative 0 at the kink).
  std::vector<Matrix> acts(num_layers);
  {
    const Matrix* cur = &X;
    for (std::size_t l = 0; l < num_layers; ++l) {
      const Layer& L = layers[l];
      const std::size_t out_w = L.weight.rows();
      const std::size_t in_w = L.weight.cols();
      Matrix next(n, out_w);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = cur->data() + i * in_w;
        double* ni = next.data() + i * out_w;
        for (std::size_t o = 0; o < out_w; ++o) {
          const double* wo = L.weight.data() + o * in_w;
          double acc = L.bias[o];
          for (std::size_t k = 0; k < in_w; ++k) acc += wo[k] * xi[k];
          ni[o] = acc;
        }
      }
      if (l + 1 < num_layers) {
        for (std::size_t i = 0; i < n * out_w; ++i) {
          if (next.data()[i] < 0.0) next.data()[i] = 0.0;
        }
      }
      acts[l] = std::move(next);
      cur = &acts[l];
    }
  }

  Gradients grads{zeros_like(layers)};
  Matrix delta(n, 1);
  for (std::size_t i = 0; i < n; ++i) delta(i, 0) = upstream[i];

  for (std::size_t li = num_layers; li-- > 0;) {
    const Layer& L = layers[li];
    const std::size_t out_w = L.weight.rows();
    const std::size_t in_w = L.weight.cols();
    const Matrix& a_in = li == 0 ? X : acts[li - 1];
    Layer& g = grads.layers[li];

    for (std::size_t i = 0; i < n; ++i) {
      const double* di = delta.data() + i * out_w;
      const double* ai = a_in.data() + i * in_w;
      for (std::size_t o = 0; o < out_w; ++o) {
        const double d = di[o];
        if (d == 0.0) continue;
        g.bias[o] += d;
        double* gw = g.weight.data() + o * in_w;
        for (std::size_t k = 0; k < in_w; ++k) gw[k] += d * ai[k];
      }
    }

    if (li > 0) {
      Matrix prev(n, in_w, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* di = delta.data() + i * out_w;
        double* pi = prev.data() + i * in_w;
        for (std::size_t o = 0; o < out_w; ++o) {
          const double d = di[o];
          if (d == 0.0) continue;
          const double* wo = L.weight.data() + o * in_w;
          for (std::size_t k = 0; k < in_w; ++k) pi[k] += d * wo[k];
        }
        const double* ai = a_in.data() + i * in_w;
        for (std::size_t k = 0; k < in_w; ++k) {
          if (ai[k] <= 0.0) pi[k] = 0.0;
        }
      }
      delta = std::move(prev);
    }
  }
  return grads;
}

AdamState::AdamState(const RegressionModel& model, double learning_rate)
    : learning_rate(learning_rate),
      m(zeros_like(model.layers())),
      v(zeros_like(model.layers())) {}

namespace {

void adam_update(std::span<double> theta, std::span<const double> g,
                 std::span<double> m, std::span<double> v, const AdamState& s,
                 double bc1, double bc2, const std::string& where) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NonFiniteError("adam: non-finite gradient at " + where + "[" +
                           std::to_string(i) + "]");
    }
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    theta[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

}  // namespace

void adam_step(RegressionModel& model, const Gradients& grads, AdamState& state) {
  std::vector<Layer>& layers = model.mutable_layers();
  if (grads.layers.size() != layers.size()) {
    throw ShapeError("adam: gradient has " + std::to_string(grads.layers.size()) +
                     " layers, model has " + std::to_string(layers.size()));
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Layer& L = layers[l];
    const Layer& G = grads.layers[l];
    if (G.weight.rows() != L.weight.rows() || G.weight.cols() != L.weight.cols() ||
        G.bias.size() != L.bias.size()) {
      throw ShapeError("adam: gradient shape mismatch at layer " + std::to_string(l));
    }
    const std::string tag = "layer " + std::to_string(l);
    adam_update({L.weight.data(), L.weight.rows() * L.weight.cols()},
                {G.weight.data(), G.weight.rows() * G.weight.cols()},
                {state.m[l].weight.data(), L.weight.rows() * L.weight.cols()},
                {state.v[l].weight.data(), L.weight.rows() * L.weight.cols()},
                state, bc1, bc2, tag + " weight");
    adam_update(L.bias, G.bias, state.m[l].bias, state.v[l].bias, state, bc1, bc2,
                tag + " bias");
  }
}

std::string RegressionModel::to_json_string() const {
  nlohmann::json j;
  j["kind"] = model_kind_name(kind_);
  std::vector<std::size_t> dims{input_dim()};
  for (const Layer& L : layers_) dims.push_back(L.weight.rows());
  j["dims"] = dims;
  nlohmann::json jl = nlohmann::json::array();
  for (const Layer& L : layers_) {
    nlohmann::json w = nlohmann::json::array();
    for (std::size_t i = 0; i < L.weight.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t k = 0; k < L.weight.cols(); ++k) row.push_back(L.weight(i, k));
      w.push_back(std::move(row));
    }
    jl.push_back({{"weight", std::move(w)}, {"bias", L.bias}});
  }
  j["layers"] = std::move(jl);
  return j.dump();
}

RegressionModel RegressionModel::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    std::vector<Layer> layers;
    for (const auto& jl : j.at("layers")) {
      const auto& w = jl.at("weight");
      const std::size_t rows = w.size();
      const std::size_t cols = rows == 0 ? 0 : w.at(0).size();
      Layer L{Matrix(rows, cols), jl.at("bias").get<std::vector<double>>()};
      for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = w.at(i);
        if (row.size() != cols) throw LoadError("checkpoint: ragged weight matrix");
        for (std::size_t k = 0; k < cols; ++k) L.weight(i, k) = row.at(k).get<double>();
      }
      layers.push_back(std::move(L));
    }
    return from_layers(kind, std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint: malformed structure: ") + e.what());
  }
}

void save_checkpoint(const RegressionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open '" + path.string() + "' for writing");
  out << model.to_json_string() << '\n';
}

RegressionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return RegressionModel::from_json_string(ss.str());
}

}  // namespace plr
