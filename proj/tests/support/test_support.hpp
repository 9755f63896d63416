#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tmlab/env/touchmark.hpp"
#include "tmlab/nn/mlp.hpp"
#include "tmlab/replay/replay_buffer.hpp"
#include "tmlab/rng.hpp"

namespace tmlab::testing {

// Central differences of f() with respect to every parameter of `net`.
// f reads `net` by reference; parameters are restored after each probe.
template <class F>
std::vector<double> numeric_gradient(nn::Mlp& net, F&& f, double h = 1e-5) {
  std::vector<double> g(net.parameter_count());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& p = net.parameter(i);
    const double saved = p;
    p = saved + h;
    const double up = f();
    p = saved - h;
    const double down = f();
    p = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// |a - b| / (|a| + |b|) in the Euclidean norm; 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

inline nn::Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  nn::Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
  }
  return m;
}

// A replay transition with random contents and team-consistent labels.
inline replay::Transition random_transition(Rng& rng) {
  replay::Transition t;
  for (auto& o : t.obs) for (auto& v : o) v = rng.uniform(-1.5, 1.5);
  for (auto& o : t.obs_next) for (auto& v : o) v = rng.uniform(-1.5, 1.5);
  for (auto& v : t.global) v = rng.uniform(-1.5, 1.5);
  for (auto& v : t.global_next) v = rng.uniform(-1.5, 1.5);
  for (auto& a : t.actions) for (auto& v : a) v = rng.uniform(-1.0, 1.0);
  for (auto& r : t.rewards) r = rng.uniform(-30.0, 30.0);
  const int l0 = rng.bernoulli(0.5) ? 1 : 2;
  const int l1 = rng.bernoulli(0.5) ? 1 : 2;
  t.labels = {l0, l0, l1, l1};
  t.done = rng.bernoulli(0.2);
  return t;
}

inline std::vector<replay::Transition> random_transitions(int n, Rng& rng) {
  std::vector<replay::Transition> v;
  for (int i = 0; i < n; ++i) {
    v.push_back(random_transition(rng));
    v.back().serial = static_cast<std::uint64_t>(i);
  }
  return v;
}

}  // namespace tmlab::testing
