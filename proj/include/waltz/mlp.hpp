#pragma once

// Dense ReLU network with a softmax output, trained on categorical
// cross-entropy with Adam. Samples are columns: an input batch is
// input_dim x N and the output is output_dim x N.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "waltz/error.hpp"
#include "waltz/numeric.hpp"

namespace waltz {

struct MlpSpec {
  int depth = 2;  // hidden layers
  int width = 64;
  int input_dim = 400;
  int output_dim = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (depth < 1 || width < 1 || input_dim < 1 || output_dim < 2) {
      throw ConfigError("network depth, width and dimensions must be positive");
    }
  }
};

/// Weights and biases of every layer; also used for gradients and Adam
/// moments, which share the shape of the parameters.
template <typename Scalar>
struct MlpParameters {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;  // layer l: out x in
  std::vector<Vector> biases;

  std::size_t layers() const { return weights.size(); }

  MlpParameters zeros_like() const {
    MlpParameters out;
    for (const auto& w : weights) out.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) out.biases.push_back(Vector::Zero(b.size()));
    return out;
  }

  /// Applies fn(Matrix-like&, const Matrix-like&...) to every block pairwise.
  template <typename Fn, typename... Others>
  void zip(Fn&& fn, Others&... others) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      fn(weights[l], others.weights[l]...);
      fn(biases[l], others.biases[l]...);
    }
  }

  friend bool operator==(const MlpParameters& a, const MlpParameters& b) {
    if (a.layers() != b.layers()) return false;
    for (std::size_t l = 0; l < a.layers(); ++l) {
      if (a.weights[l].rows() != b.weights[l].rows() ||
          a.weights[l].cols() != b.weights[l].cols() ||
          a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) {
        return false;
      }
    }
    return true;
  }
};

template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Parameters = MlpParameters<Scalar>;

  /// Glorot-uniform weights, zero biases, drawn from spec.seed.
  explicit Mlp(const MlpSpec& spec) : spec_(spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const auto sizes = layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int in = sizes[l];
      const int out = sizes[l + 1];
      const double limit = std::sqrt(6.0 / (in + out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      Matrix w(out, in);
      // Column-major fill order is part of the determinism contract.
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          w(i, j) = static_cast<Scalar>(dist(rng));
        }
      }
      params_.weights.push_back(std::move(w));
      params_.biases.push_back(Vector::Zero(out));
    }
  }

  Mlp(const MlpSpec& spec, Parameters params)
      : spec_(spec), params_(std::move(params)) {
    spec.validate();
    const auto sizes = layer_sizes();
    if (params_.layers() + 1 != sizes.size()) {
      throw SchemaError("layer count does not match the network spec");
    }
    for (std::size_t l = 0; l < params_.layers(); ++l) {
      if (params_.weights[l].rows() != sizes[l + 1] ||
          params_.weights[l].cols() != sizes[l] ||
          params_.biases[l].size() != sizes[l + 1]) {
        throw SchemaError("layer " + std::to_string(l) +
                          " shape does not match the network spec");
      }
    }
  }

  const MlpSpec& spec() const { return spec_; }
  const Parameters& parameters() const { return params_; }
  Parameters& parameters() { return params_; }

  std::vector<int> layer_sizes() const {
    std::vector<int> sizes{spec_.input_dim};
    for (int d = 0; d < spec_.depth; ++d) sizes.push_back(spec_.width);
    sizes.push_back(spec_.output_dim);
    return sizes;
  }

  template <typename Derived>
  Matrix logits(const Eigen::MatrixBase<Derived>& inputs) const {
    Matrix a = inputs;
    for (std::size_t l = 0; l < params_.layers(); ++l) {
      Matrix z = (params_.weights[l] * a).colwise() + params_.biases[l];
      a = l + 1 < params_.layers() ? Matrix(z.cwiseMax(Scalar(0))) : z;
    }
    return a;
  }

  /// Class probabilities, one column per input column.
  template <typename Derived>
  Matrix forward(const Eigen::MatrixBase<Derived>& inputs) const {
    return softmax_columns(logits(inputs));
  }

  struct LossAndGrad {
    Scalar loss = 0;
    Parameters grad;
  };

  /// Mean cross-entropy of the labelled columns and its gradient.
  template <typename Derived>
  LossAndGrad loss_and_grad(const Eigen::MatrixBase<Derived>& inputs,
                            std::span<const int> labels) const {
    const Eigen::Index n = inputs.cols();
    if (n == 0 || static_cast<std::size_t>(n) != labels.size()) {
      throw LengthMismatch("batch and label counts differ or batch is empty");
    }
    const std::size_t layers = params_.layers();
    std::vector<Matrix> acts;  // acts[l] is the input of layer l
    acts.reserve(layers);
    acts.emplace_back(inputs);
    Matrix z;
    for (std::size_t l = 0; l < layers; ++l) {
      z = (params_.weights[l] * acts[l]).colwise() + params_.biases[l];
      if (l + 1 < layers) acts.emplace_back(z.cwiseMax(Scalar(0)));
    }

    LossAndGrad out;
    const auto col_max = z.colwise().maxCoeff();
    Matrix shifted = z.rowwise() - col_max;
    Matrix probs = shifted.array().exp();
    const auto sums = probs.colwise().sum();
    Scalar loss = 0;
    for (Eigen::Index c = 0; c < n; ++c) {
      const int y = labels[static_cast<std::size_t>(c)];
      if (y < 0 || y >= spec_.output_dim) {
        throw LengthMismatch("label index out of range");
      }
      loss -= shifted(y, c) - std::log(sums(c));
    }
    out.loss = loss / static_cast<Scalar>(n);
    probs.array().rowwise() /= sums.array();

    Matrix delta = std::move(probs);
    for (Eigen::Index c = 0; c < n; ++c) {
      delta(labels[static_cast<std::size_t>(c)], c) -= Scalar(1);
    }
    delta /= static_cast<Scalar>(n);

    out.grad.weights.resize(layers);
    out.grad.biases.resize(layers);
    for (std::size_t l = layers; l-- > 0;) {
      out.grad.weights[l] = delta * acts[l].transpose();
      out.grad.biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = params_.weights[l].transpose() * delta;
        delta = (acts[l].array() > Scalar(0)).select(back, Scalar(0));
      }
    }
    return out;
  }

 private:
  MlpSpec spec_;
  Parameters params_;
};

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  MlpParameters<Scalar> first_moment;
  MlpParameters<Scalar> second_moment;

  AdamState(const MlpParameters<Scalar>& like, const AdamConfig& cfg = {})
      : config(cfg),
        first_moment(like.zeros_like()),
        second_moment(like.zeros_like()) {}
};

/// One bias-corrected Adam update of params in place.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, MlpParameters<Scalar>& params,
               MlpParameters<Scalar>& grads) {
  state.step += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, t));
  const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, t));
  const Scalar alpha = static_cast<Scalar>(c.alpha);
  const Scalar eps = static_cast<Scalar>(c.epsilon);
  params.zip(
      [&](auto& theta, auto& g, auto& m, auto& v) {
        m = b1 * m + (Scalar(1) - b1) * g;
        v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
        theta.array() -= alpha * (m.array() / correction1) /
                         ((v.array() / correction2).sqrt() + eps);
      },
      grads, state.first_moment, state.second_moment);
}

struct TrainOptions {
  int epochs = 150;
  int batch_size = 32;
  AdamConfig adam;
};

template <typename Scalar>
struct TrainResult {
  Mlp<Scalar> model;
  std::vector<double> epoch_loss;  // mean training loss seen in each epoch
};

/// Mini-batch Adam on columns of `inputs`. Initialization and the per-epoch
/// shuffle both derive from spec.seed.
template <typename Scalar>
TrainResult<Scalar> train_mlp(
    const MlpSpec& spec,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& inputs,
    std::span<const int> labels, const TrainOptions& options) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  if (inputs.cols() == 0 ||
      static_cast<std::size_t>(inputs.cols()) != labels.size()) {
    throw LengthMismatch("training inputs and labels differ in count");
  }
  if (inputs.rows() != spec.input_dim) {
    throw LengthMismatch("training inputs do not match the input dimension");
  }
  if (options.batch_size < 1 || options.epochs < 0) {
    throw ConfigError("batch size must be positive and epochs non-negative");
  }
  TrainResult<Scalar> result{Mlp<Scalar>(spec), {}};
  AdamState<Scalar> adam(result.model.parameters(), options.adam);
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);

  const Eigen::Index n = inputs.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Matrix batch;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (Eigen::Index start = 0; start < n; start += options.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(options.batch_size, n - start);
      batch.resize(inputs.rows(), size);
      batch_labels.resize(static_cast<std::size_t>(size));
      for (Eigen::Index c = 0; c < size; ++c) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + c)];
        batch.col(c) = inputs.col(src);
        batch_labels[static_cast<std::size_t>(c)] = labels[static_cast<std::size_t>(src)];
      }
      auto step = result.model.loss_and_grad(batch, batch_labels);
      total += static_cast<double>(step.loss) * static_cast<double>(size);
      adam_step(adam, result.model.parameters(), step.grad);
    }
    result.epoch_loss.push_back(total / static_cast<double>(n));
  }
  return result;
}

}  // namespace waltz
