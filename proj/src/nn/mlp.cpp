#include "tmlab/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "tmlab/errors.hpp"

namespace tmlab::nn {
namespace {

void activate(Activation a, const Matrix& pre, Matrix& post) {
  switch (a) {
    case Activation::kIdentity:
      post = pre;
      break;
    case Activation::kRelu:
      post = pre.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      post = pre.array().tanh().matrix();
      break;
    case Activation::kSigmoid:
      post = (1.0 / (1.0 + (-pre.array()).exp())).matrix();
      break;
  }
}

// Multiplies `grad` in place by the activation derivative.
void apply_derivative(Activation a, const Matrix& pre, const Matrix& post, Matrix& grad) {
  switch (a) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      grad = (pre.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::kTanh:
      grad.array() *= 1.0 - post.array().square();
      break;
    case Activation::kSigmoid:
      grad.array() *= post.array() * (1.0 - post.array());
      break;
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

void Gradients::set_zero() {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("Gradients: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
  return *this;
}

bool Gradients::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    if (l.weight.size() > 0) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

std::size_t Gradients::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

double Gradients::flat(std::size_t index) const {
  for (const auto& l : layers) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    if (index < w) {
      const auto cols = static_cast<std::size_t>(l.weight.cols());
      return l.weight(static_cast<Eigen::Index>(index / cols),
                      static_cast<Eigen::Index>(index % cols));
    }
    index -= w;
    const auto b = static_cast<std::size_t>(l.bias.size());
    if (index < b) return l.bias(static_cast<Eigen::Index>(index));
    index -= b;
  }
  throw ShapeError("Gradients::flat: index out of range");
}

std::vector<double> Gradients::to_vector() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(flat(i));
  return out;
}

Mlp::Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output)
    : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw ShapeError("Mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw ShapeError("Mlp: layer sizes must be positive");
  }
  layers_.reserve(sizes_.size() - 1);
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    layers_.push_back({Matrix::Zero(sizes_[i + 1], sizes_[i]), Vector::Zero(sizes_[i + 1])});
  }
}

Mlp Mlp::random(std::vector<int> layer_sizes, Activation hidden, Activation output, Rng& rng) {
  Mlp net(std::move(layer_sizes), hidden, output);
  for (auto& l : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = rng.uniform(-bound, bound);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = rng.uniform(-bound, bound);
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    n += static_cast<std::size_t>(sizes_[i] + 1) * static_cast<std::size_t>(sizes_[i + 1]);
  }
  return n;
}

double& Mlp::parameter(std::size_t index) {
  for (auto& l : layers_) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    if (index < w) {
      const auto cols = static_cast<std::size_t>(l.weight.cols());
      return l.weight(static_cast<Eigen::Index>(index / cols),
                      static_cast<Eigen::Index>(index % cols));
    }
    index -= w;
    const auto b = static_cast<std::size_t>(l.bias.size());
    if (index < b) return l.bias(static_cast<Eigen::Index>(index));
    index -= b;
  }
  throw ShapeError("Mlp::parameter: index out of range");
}

double Mlp::parameter(std::size_t index) const {
  return const_cast<Mlp*>(this)->parameter(index);
}

void Mlp::check_input_rows(Eigen::Index rows) const {
  if (sizes_.empty()) throw ShapeError("Mlp: empty network");
  if (rows != sizes_.front()) {
    throw ShapeError("Mlp: input size " + std::to_string(rows) + " != expected " +
                     std::to_string(sizes_.front()));
  }
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  check_input_rows(static_cast<Eigen::Index>(input.size()));
  Vector act = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  Vector pre;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    pre.noalias() = layers_[i].weight * act;
    pre += layers_[i].bias;
    const Activation a = i + 1 == layers_.size() ? output_ : hidden_;
    switch (a) {
      case Activation::kIdentity:
        act = pre;
        break;
      case Activation::kRelu:
        act = pre.cwiseMax(0.0);
        break;
      case Activation::kTanh:
        act = pre.array().tanh().matrix();
        break;
      case Activation::kSigmoid:
        act = (1.0 / (1.0 + (-pre.array()).exp())).matrix();
        break;
    }
  }
  return {act.data(), act.data() + act.size()};
}

Matrix Mlp::forward(const Matrix& inputs) const {
  check_input_rows(inputs.rows());
  Matrix act = inputs;
  Matrix pre;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    pre.noalias() = layers_[i].weight * act;
    pre.colwise() += layers_[i].bias;
    activate(i + 1 == layers_.size() ? output_ : hidden_, pre, act);
  }
  return act;
}

ForwardTape Mlp::forward_tape(const Matrix& inputs) const {
  check_input_rows(inputs.rows());
  ForwardTape tape;
  tape.input = inputs;
  tape.pre.resize(layers_.size());
  tape.post.resize(layers_.size());
  const Matrix* act = &tape.input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    tape.pre[i].noalias() = layers_[i].weight * (*act);
    tape.pre[i].colwise() += layers_[i].bias;
    activate(i + 1 == layers_.size() ? output_ : hidden_, tape.pre[i], tape.post[i]);
    act = &tape.post[i];
  }
  return tape;
}

Backprop Mlp::backward(const ForwardTape& tape, const Matrix& upstream) const {
  if (tape.post.size() != layers_.size()) throw ShapeError("Mlp::backward: tape/net mismatch");
  if (upstream.rows() != output_size() || upstream.cols() != tape.input.cols()) {
    throw ShapeError("Mlp::backward: upstream gradient shape mismatch");
  }
  Backprop result;
  result.grads.layers.resize(layers_.size());
  Matrix grad = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    apply_derivative(k + 1 == layers_.size() ? output_ : hidden_, tape.pre[k], tape.post[k], grad);
    const Matrix& below = k == 0 ? tape.input : tape.post[k - 1];
    result.grads.layers[k].weight.noalias() = grad * below.transpose();
    result.grads.layers[k].bias = grad.rowwise().sum();
    grad = layers_[k].weight.transpose() * grad;
  }
  result.input_grad = std::move(grad);
  return result;
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  g.layers.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return g;
}

bool Mlp::same_shape(const Mlp& other) const { return sizes_ == other.sizes_; }

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.sizes_ != b.sizes_ || a.hidden_ != b.hidden_ || a.output_ != b.output_) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias) {
      return false;
    }
  }
  return true;
}

Backprop backward(const Mlp& net, std::span<const double> input,
                  std::span<const double> upstream_grad) {
  const ForwardTape tape = net.forward_tape(column(input));
  if (static_cast<int>(upstream_grad.size()) != net.output_size()) {
    throw ShapeError("backward: upstream gradient length != output size");
  }
  return net.backward(tape, column(upstream_grad));
}

void polyak_update(Mlp& target, const Mlp& source, double rate) {
  if (!target.same_shape(source)) throw ShapeError("polyak_update: shape mismatch");
  if (!(rate >= 0.0 && rate <= 1.0)) throw InputError("polyak_update: rate outside [0, 1]");
  auto& t = target.layers();
  const auto& s = source.layers();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (rate == 1.0) {
      t[i] = s[i];
      continue;
    }
    t[i].weight = (1.0 - rate) * t[i].weight + rate * s[i].weight;
    t[i].bias = (1.0 - rate) * t[i].bias + rate * s[i].bias;
  }
}

Matrix column(std::span<const double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
  return m;
}

}  // namespace tmlab::nn
