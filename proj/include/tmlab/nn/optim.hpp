#pragma once

#include <cstdint>

#include "tmlab/nn/mlp.hpp"

namespace tmlab::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moments mirror the parameter layout of the network they
// were created for.
struct AdamState {
  AdamConfig config;
  Gradients first;
  Gradients second;
  std::uint64_t step = 0;

  static AdamState for_net(const Mlp& net, AdamConfig config);
};

// One bias-corrected Adam step (gradient descent direction). Throws
// NumericError if any gradient is non-finite, leaving net and state untouched.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

}  // namespace tmlab::nn
