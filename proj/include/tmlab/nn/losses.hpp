#pragma once

#include <span>
#include <vector>

#include "tmlab/rng.hpp"

namespace tmlab::nn {

inline constexpr double kProbabilityClamp = 1e-7;

struct LossValue {
  double loss = 0.0;
  double gradient = 0.0;  // d loss / d prediction
};

// Binary cross-entropy for a policy label: label 1 maps to target 1.0 and
// label 2 to target 0.0. The prediction is clamped to [eps, 1 - eps].
LossValue cross_entropy(double prediction, int label);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Reparameterized draw from tanh(N(mean, exp(log_std)^2)).
struct SquashedSample {
  std::vector<double> noise;       // standard normal draws
  std::vector<double> pre_squash;  // mean + std * noise
  std::vector<double> action;      // tanh(pre_squash), in (-1, 1)
  double log_prob = 0.0;           // density of `action`, including the tanh correction
};

// Derivatives of a SquashedSample with the noise held fixed. All vectors are
// per action dimension (the Jacobians are diagonal).
struct SquashedGradients {
  std::vector<double> log_prob_d_mean;
  std::vector<double> log_prob_d_log_std;
  std::vector<double> action_d_mean;
  std::vector<double> action_d_log_std;
};

SquashedSample squashed_gaussian_sample(std::span<const double> mean,
                                        std::span<const double> log_std, Rng& rng);

// Same map with caller-supplied noise; noise = 0 gives the deterministic action.
SquashedSample squashed_gaussian_transform(std::span<const double> mean,
                                           std::span<const double> log_std,
                                           std::span<const double> noise);

SquashedGradients squashed_gaussian_gradients(std::span<const double> mean,
                                              std::span<const double> log_std,
                                              std::span<const double> noise);

// Log-density of an action in (-1, 1)^d under the squashed Gaussian.
double squashed_gaussian_log_density(std::span<const double> mean,
                                     std::span<const double> log_std,
                                     std::span<const double> action);

}  // namespace tmlab::nn
