#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "eklab/errors.hpp"
#include "eklab/radial.hpp"
#include "eklab/torus.hpp"

// Seeded random test potentials for the two testbeds.  A u64 seed fully
// determines the field, so runs that record their seed are reproducible.
//
//  - radial: amplitude * x(1-x) * p(x) with p a random quartic, i.e. a
//    polynomial of degree <= 6 vanishing at both chart ends (stays in the
//    fixed Kahler class).
//  - torus: a sum of four random cosine waves with per-axis mode index in
//    [-2, 2]; low indices keep the quartic curvature products below the
//    grid Nyquist frequency on the coarse grids the tests use.  The
//    amplitude is halved until the metric's smallest eigenvalue stays at or
//    above 0.2, so generated states sit deep inside the admissible cone.

namespace eklab {

inline Eigen::ArrayXd random_potential(const RadialEngine& eng,
                                       std::uint64_t seed,
                                       double amplitude = 0.05) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const Eigen::ArrayXd& x = eng.grid().x;
  Eigen::ArrayXd phi = Eigen::ArrayXd::Zero(x.size());
  Eigen::ArrayXd mono = x * (1.0 - x);
  for (int d = 0; d <= 4; ++d) {
    phi += coef(rng) * mono;
    mono *= x;
  }
  return amplitude * phi;
}

inline Eigen::ArrayXd random_potential(const TorusEngine& eng,
                                       std::uint64_t seed,
                                       double amplitude = 0.05,
                                       double min_eig_target = 0.2) {
  constexpr double pi = std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> mode(-2, 2);
  std::uniform_real_distribution<double> phase(0.0, 2 * pi);
  const int rank = 2 * eng.complex_dim();
  const int N = eng.axis_points();
  Eigen::ArrayXd phi = Eigen::ArrayXd::Zero(eng.num_nodes());
  for (int w = 0; w < 4; ++w) {
    std::vector<int> kv(static_cast<std::size_t>(rank));
    int n2 = 0;
    for (int a = 0; a < rank; ++a) {
      kv[static_cast<std::size_t>(a)] = mode(rng);
      n2 += kv[static_cast<std::size_t>(a)] * kv[static_cast<std::size_t>(a)];
    }
    if (n2 == 0) kv[0] = 1, n2 = 1;
    const double ph = phase(rng), a0 = amplitude / (4.0 * n2);
    for (std::int64_t p = 0; p < eng.num_nodes(); ++p) {
      std::int64_t rem = p;
      double arg = ph;
      for (int a = rank - 1; a >= 0; --a) {
        arg += 2 * pi * kv[static_cast<std::size_t>(a)] *
               (static_cast<double>(rem % N) / N);
        rem /= N;
      }
      phi[p] += a0 * std::cos(arg);
    }
  }
  for (int halvings = 0; halvings < 40; ++halvings) {
    try {
      if (eng.build(phi).min_metric_eig >= min_eig_target) return phi;
    } catch (const AdmissibilityError&) {
    }
    phi *= 0.5;
  }
  throw std::runtime_error(
      "random_potential: could not reach the metric eigenvalue target");
}

}  // namespace eklab
