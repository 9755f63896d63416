#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "tmlab/rng.hpp"

namespace tmlab::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : unsigned char { kIdentity = 0, kRelu = 1, kTanh = 2, kSigmoid = 3 };

std::string_view to_string(Activation a);

// One affine layer. `weight` is (outputs x inputs).
struct Layer {
  Matrix weight;
  Vector bias;
};

// Activations recorded by a batched forward pass; samples are columns.
struct ForwardTape {
  Matrix input;
  std::vector<Matrix> pre;   // pre-activation of each layer
  std::vector<Matrix> post;  // activation of each layer; post.back() is the output

  const Matrix& output() const { return post.back(); }
};

// Parameter-shaped buffer mirroring an Mlp's layers.
struct Gradients {
  std::vector<Layer> layers;

  void set_zero();
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  bool all_finite() const;
  double max_abs() const;
  std::size_t size() const;
  // Flat view in the canonical parameter order (see Mlp::parameter).
  double flat(std::size_t index) const;
  std::vector<double> to_vector() const;
};

struct Backprop {
  Gradients grads;
  Matrix input_grad;  // same shape as the tape input
};

// Fully connected network: hidden layers share one activation, the last
// layer has its own.
class Mlp {
 public:
  Mlp() = default;
  // Zero-initialized parameters.
  Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output);

  // Weights and biases uniform in +-1/sqrt(fan_in).
  static Mlp random(std::vector<int> layer_sizes, Activation hidden, Activation output,
                    Rng& rng);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Parameter count = sum over layers of (n_in + 1) * n_out.
  std::size_t parameter_count() const;
  // Canonical flat order: per layer, weights row-major then biases.
  double& parameter(std::size_t index);
  double parameter(std::size_t index) const;

  std::vector<double> forward(std::span<const double> input) const;
  Matrix forward(const Matrix& inputs) const;
  ForwardTape forward_tape(const Matrix& inputs) const;

  // Gradients of sum over samples of <output, upstream> with respect to every
  // parameter and to the input.
  Backprop backward(const ForwardTape& tape, const Matrix& upstream) const;

  Gradients zero_gradients() const;
  bool same_shape(const Mlp& other) const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  void check_input_rows(Eigen::Index rows) const;

  std::vector<int> sizes_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
  std::vector<Layer> layers_;
};

// Single-sample convenience wrapper over the batched backward pass.
Backprop backward(const Mlp& net, std::span<const double> input,
                  std::span<const double> upstream_grad);

// target <- (1 - rate) * target + rate * source, elementwise.
void polyak_update(Mlp& target, const Mlp& source, double rate);

Matrix column(std::span<const double> values);

}  // namespace tmlab::nn
