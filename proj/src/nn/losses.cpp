#include "tmlab/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tmlab/errors.hpp"

namespace tmlab::nn {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// log(1 - tanh(u)^2), stable for large |u|.
double log_tanh_jacobian(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

double clamp_log_std(double raw) { return std::clamp(raw, kLogStdMin, kLogStdMax); }

void check_dims(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  if (a.size() != b.size() || a.size() != c.size()) {
    throw ShapeError("squashed gaussian: mean/log_std/noise length mismatch");
  }
}

}  // namespace

LossValue cross_entropy(double prediction, int label) {
  if (label != 1 && label != 2) throw InputError("cross_entropy: label must be 1 or 2");
  const double target = label == 1 ? 1.0 : 0.0;
  const double p = std::clamp(prediction, kProbabilityClamp, 1.0 - kProbabilityClamp);
  LossValue v;
  v.loss = -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
  v.gradient = (p - target) / (p * (1.0 - p));
  return v;
}

SquashedSample squashed_gaussian_sample(std::span<const double> mean,
                                        std::span<const double> log_std, Rng& rng) {
  std::vector<double> noise(mean.size());
  for (auto& n : noise) n = rng.normal();
  return squashed_gaussian_transform(mean, log_std, noise);
}

SquashedSample squashed_gaussian_transform(std::span<const double> mean,
                                           std::span<const double> log_std,
                                           std::span<const double> noise) {
  check_dims(mean, log_std, noise);
  SquashedSample s;
  s.noise.assign(noise.begin(), noise.end());
  s.pre_squash.resize(mean.size());
  s.action.resize(mean.size());
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double ls = clamp_log_std(log_std[d]);
    const double u = mean[d] + std::exp(ls) * noise[d];
    s.pre_squash[d] = u;
    s.action[d] = std::tanh(u);
    s.log_prob += -0.5 * noise[d] * noise[d] - ls - half_log_two_pi - log_tanh_jacobian(u);
  }
  return s;
}

SquashedGradients squashed_gaussian_gradients(std::span<const double> mean,
                                              std::span<const double> log_std,
                                              std::span<const double> noise) {
  check_dims(mean, log_std, noise);
  SquashedGradients g;
  const std::size_t n = mean.size();
  g.log_prob_d_mean.resize(n);
  g.log_prob_d_log_std.resize(n);
  g.action_d_mean.resize(n);
  g.action_d_log_std.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    const bool clamped = log_std[d] < kLogStdMin || log_std[d] > kLogStdMax;
    const double sigma = std::exp(clamp_log_std(log_std[d]));
    const double u = mean[d] + sigma * noise[d];
    const double t = std::tanh(u);
    const double dtanh = 1.0 - t * t;
    g.log_prob_d_mean[d] = 2.0 * t;
    g.action_d_mean[d] = dtanh;
    g.log_prob_d_log_std[d] = clamped ? 0.0 : -1.0 + 2.0 * t * sigma * noise[d];
    g.action_d_log_std[d] = clamped ? 0.0 : dtanh * sigma * noise[d];
  }
  return g;
}

double squashed_gaussian_log_density(std::span<const double> mean,
                                     std::span<const double> log_std,
                                     std::span<const double> action) {
  check_dims(mean, log_std, action);
  std::vector<double> noise(mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) {
    if (!(action[d] > -1.0 && action[d] < 1.0)) {
      throw InputError("squashed_gaussian_log_density: action outside (-1, 1)");
    }
    noise[d] = (std::atanh(action[d]) - mean[d]) / std::exp(clamp_log_std(log_std[d]));
  }
  return squashed_gaussian_transform(mean, log_std, noise).log_prob;
}

}  // namespace tmlab::nn
