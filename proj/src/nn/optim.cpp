#include "tmlab/nn/optim.hpp"

#include <cmath>

#include "tmlab/errors.hpp"

namespace tmlab::nn {

AdamState AdamState::for_net(const Mlp& net, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.first = net.zero_gradients();
  s.second = net.zero_gradients();
  return s;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || state.first.layers.size() != layers.size()) {
    throw ShapeError("adam_step: gradient/state layout does not match network");
  }
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= c.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + c.epsilon);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.layers[i].weight.rows() != layers[i].weight.rows() ||
        grads.layers[i].weight.cols() != layers[i].weight.cols()) {
      throw ShapeError("adam_step: layer shape mismatch");
    }
    update(layers[i].weight, grads.layers[i].weight, state.first.layers[i].weight,
           state.second.layers[i].weight);
    update(layers[i].bias, grads.layers[i].bias, state.first.layers[i].bias,
           state.second.layers[i].bias);
  }
}

}  // namespace tmlab::nn
