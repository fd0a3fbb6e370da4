#ifndef MORL_NUMKIT_MLP_HPP_
#define MORL_NUMKIT_MLP_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "morl/common/error.hpp"
#include "morl/common/rng.hpp"
#include "morl/numkit/param_tensor.hpp"

namespace morl::numkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { kTanh, kElu, kLinear };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kElu: return "elu";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "elu") return Activation::kElu;
  if (s == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation '" + s + "' (valid: tanh, elu, linear)");
}

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 1;
  Activation activation = Activation::kTanh;

  void validate() const {
    if (input_dim < 1 || output_dim < 1) {
      throw ConfigError("MlpSpec: input and output dims must be >= 1");
    }
    for (auto h : hidden_dims) {
      if (h < 1) throw ConfigError("MlpSpec: hidden dims must be >= 1");
    }
  }

  // Layer widths including input and output.
  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{input_dim};
    w.insert(w.end(), hidden_dims.begin(), hidden_dims.end());
    w.push_back(output_dim);
    return w;
  }
};

class Mlp;

// Activations cached by a training forward pass. One tape per forward call;
// backward refuses a tape that was produced by another network.
struct MlpTape {
  const Mlp* owner = nullptr;
  Matrix input;
  std::vector<Matrix> hidden;  // post-activation outputs of hidden layers

  bool empty() const { return owner == nullptr; }
};

// Feedforward network: hidden layers use `activation`, the output layer is
// affine. Inputs and outputs are column-major batches (dim x batch).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, MlpSpec spec) : name_(std::move(name)), spec_(std::move(spec)) {
    spec_.validate();
    const auto w = spec_.widths();
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      const std::string prefix = name_ + ".l" + std::to_string(l);
      weights_.emplace_back(prefix + ".weight", std::vector<std::size_t>{w[l + 1], w[l]});
      biases_.emplace_back(prefix + ".bias", std::vector<std::size_t>{w[l + 1]});
    }
  }

  // Rebuilding invalidates pointers handed out by params(); copy with care.
  Mlp(const Mlp&) = default;
  Mlp& operator=(const Mlp&) = default;
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  const std::string& name() const { return name_; }
  const MlpSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return weights_.size(); }

  ParamTensor& weight(std::size_t l) { return weights_.at(l); }
  ParamTensor& bias(std::size_t l) { return biases_.at(l); }
  const ParamTensor& weight(std::size_t l) const { return weights_.at(l); }
  const ParamTensor& bias(std::size_t l) const { return biases_.at(l); }

  ParamRefs params() {
    ParamRefs refs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      refs.push_back(&weights_[l]);
      refs.push_back(&biases_[l]);
    }
    return refs;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      n += weights_[l].size() + biases_[l].size();
    }
    return n;
  }

  // Orthogonal initialization, biases zero.
  void init_orthogonal(Rng& rng, double hidden_gain, double output_gain) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double gain = (l + 1 == weights_.size()) ? output_gain : hidden_gain;
      const auto rows = static_cast<Eigen::Index>(weights_[l].shape[0]);
      const auto cols = static_cast<Eigen::Index>(weights_[l].shape[1]);
      const bool tall = rows >= cols;
      Matrix a(tall ? rows : cols, tall ? cols : rows);
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = standard_normal(rng);
      }
      Eigen::HouseholderQR<Matrix> qr(a);
      Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
      const Matrix r = qr.matrixQR().topRows(a.cols()).template triangularView<Eigen::Upper>();
      for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
      }
      const Matrix w = tall ? q : Matrix(q.transpose());
      auto dst = weight_map(l);
      dst = gain * w;
      std::fill(biases_[l].values.begin(), biases_[l].values.end(), 0.0);
    }
  }

  // Inference forward pass; pure.
  Matrix forward(const Matrix& input) const {
    check_input(input);
    Matrix x = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix pre = weight_map(l) * x;
      pre.colwise() += bias_map(l);
      if (l + 1 < weights_.size()) apply_activation(pre);
      check_finite(pre, l);
      x = std::move(pre);
    }
    return x;
  }

  Vector forward(const Vector& input) const {
    return forward(Matrix(input)).col(0);
  }

  // Training forward pass; records what backward needs into `tape`.
  Matrix forward(const Matrix& input, MlpTape& tape) const {
    check_input(input);
    tape.owner = this;
    tape.input = input;
    tape.hidden.clear();
    const Matrix* x = &tape.input;
    Matrix out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix pre = weight_map(l) * (*x);
      pre.colwise() += bias_map(l);
      check_finite(pre, l);
      if (l + 1 < weights_.size()) {
        apply_activation(pre);
        tape.hidden.push_back(std::move(pre));
        x = &tape.hidden.back();
      } else {
        out = std::move(pre);
      }
    }
    return out;
  }

  // Accumulates d(sum(output .* upstream))/d(theta) into the grad fields and
  // returns the gradient with respect to the input batch.
  Matrix backward(const MlpTape& tape, const Matrix& upstream) {
    if (tape.empty() || tape.owner != this) {
      throw UsageError("Mlp '" + name_ + "': backward called without a matching forward tape");
    }
    if (upstream.rows() != static_cast<Eigen::Index>(spec_.output_dim) ||
        upstream.cols() != tape.input.cols()) {
      throw UsageError("Mlp '" + name_ + "': upstream gradient shape mismatch");
    }
    Matrix delta = upstream;
    for (std::size_t li = weights_.size(); li-- > 0;) {
      const Matrix& x = li == 0 ? tape.input : tape.hidden[li - 1];
      weight_grad_map(li).noalias() += delta * x.transpose();
      bias_grad_map(li) += delta.rowwise().sum();
      Matrix dx = weight_map(li).transpose() * delta;
      if (li > 0) {
        apply_activation_derivative(tape.hidden[li - 1], dx);
      }
      delta = std::move(dx);
    }
    return delta;
  }

 private:
  Eigen::Map<const RowMatrix> weight_map(std::size_t l) const {
    const auto& w = weights_[l];
    return {w.values.data(), static_cast<Eigen::Index>(w.shape[0]),
            static_cast<Eigen::Index>(w.shape[1])};
  }
  Eigen::Map<RowMatrix> weight_map(std::size_t l) {
    auto& w = weights_[l];
    return {w.values.data(), static_cast<Eigen::Index>(w.shape[0]),
            static_cast<Eigen::Index>(w.shape[1])};
  }
  Eigen::Map<RowMatrix> weight_grad_map(std::size_t l) {
    auto& w = weights_[l];
    return {w.grad.data(), static_cast<Eigen::Index>(w.shape[0]),
            static_cast<Eigen::Index>(w.shape[1])};
  }
  Eigen::Map<const Vector> bias_map(std::size_t l) const {
    const auto& b = biases_[l];
    return {b.values.data(), static_cast<Eigen::Index>(b.size())};
  }
  Eigen::Map<Vector> bias_grad_map(std::size_t l) {
    auto& b = biases_[l];
    return {b.grad.data(), static_cast<Eigen::Index>(b.size())};
  }

  void check_input(const Matrix& input) const {
    if (input.rows() != static_cast<Eigen::Index>(spec_.input_dim)) {
      throw ConfigError("Mlp '" + name_ + "': expected input dim " +
                        std::to_string(spec_.input_dim) + ", got " +
                        std::to_string(input.rows()));
    }
    if (!input.allFinite()) {
      throw NumericError("Mlp '" + name_ + "': non-finite input at layer 0");
    }
  }

  void check_finite(const Matrix& m, std::size_t layer) const {
    if (!m.allFinite()) {
      throw NumericError("Mlp '" + name_ + "': non-finite activation at layer " +
                         std::to_string(layer));
    }
  }

  void apply_activation(Matrix& m) const {
    switch (spec_.activation) {
      case Activation::kTanh:
        m = m.array().tanh();
        break;
      case Activation::kElu:
        m = m.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
        break;
      case Activation::kLinear:
        break;
    }
  }

  // Multiplies `grad` in place by the activation derivative, expressed in
  // terms of the activation output `h`.
  void apply_activation_derivative(const Matrix& h, Matrix& grad) const {
    switch (spec_.activation) {
      case Activation::kTanh:
        grad.array() *= 1.0 - h.array().square();
        break;
      case Activation::kElu:
        grad.array() *= h.unaryExpr([](double v) { return v > 0.0 ? 1.0 : v + 1.0; }).array();
        break;
      case Activation::kLinear:
        break;
    }
  }

  std::string name_;
  MlpSpec spec_;
  std::vector<ParamTensor> weights_;
  std::vector<ParamTensor> biases_;
};

}  // namespace morl::numkit

#endif  // MORL_NUMKIT_MLP_HPP_
