#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "eklab/energy.hpp"
#include "eklab/radial.hpp"
#include "eklab/torus.hpp"

using namespace eklab;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::ArrayXd radial_poly(const RadialEngine& eng, double amp,
                           unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const auto& x = eng.grid().x;
  Eigen::ArrayXd phi = Eigen::ArrayXd::Zero(x.size());
  Eigen::ArrayXd mono = x * (1.0 - x);
  for (int d = 0; d < 4; ++d) {
    phi += coef(rng) * mono;
    mono *= x;
  }
  return amp * phi;
}

Eigen::ArrayXd torus_modes(const TorusEngine& eng, double amp,
                           unsigned seed) {
  std::mt19937 rng(seed);
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
    const double ph = phase(rng), a0 = amp / (4.0 * n2);
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
  return phi;
}

}  // namespace

TEST_CASE("class constants for both testbeds") {
  CHECK(mu_k("projective", 3, 0) == 1.0);
  CHECK(mu_k("projective", 3, 3) == 1.0);
  CHECK(mu_k("torus", 2, 1) == 0.0);
  CHECK_THROWS_AS(mu_k("projective", 2, 3), std::domain_error);
  CHECK_THROWS_AS(mu_k("projective", 2, -1), std::domain_error);
  CHECK_THROWS_AS(mu_k("plane", 2, 1), std::domain_error);
}

TEST_CASE("quadrature recovers the class constant on live states") {
  RadialEngine eng(2, 128);
  const auto fs = eng.build(eng.fubini_study());
  for (int k = 0; k < 2; ++k)
    CHECK(mu_from_state(eng, fs, k) == Approx(1.0).margin(1e-10));
  const auto pert = eng.build(radial_poly(eng, 0.02, 5u));
  for (int k = 0; k < 2; ++k)
    CHECK(mu_from_state(eng, pert, k) == Approx(1.0).margin(1e-8));

  TorusEngine tor(2, 16);
  const auto flat = tor.build(Eigen::ArrayXd::Zero(tor.num_nodes()));
  for (int k = 0; k < 2; ++k)
    CHECK(mu_from_state(tor, flat, k) == Approx(0.0).margin(1e-12));
  const auto bumpy = tor.build(torus_modes(tor, 0.05, 6u));
  CHECK(mu_from_state(tor, bumpy, 0) == Approx(0.0).margin(1e-10));
}

TEST_CASE("the bracket vanishes identically on model states") {
  RadialEngine eng(3, 128);
  const auto fs = eng.build(eng.fubini_study());
  for (int k = 0; k <= 3; ++k)
    CHECK(fs.sup_window(ek_bracket(eng, fs, k)) < 1e-9);

  TorusEngine tor(1, 32);
  const auto flat = tor.build(Eigen::ArrayXd::Zero(tor.num_nodes()));
  for (int k = 0; k <= 1; ++k)
    CHECK(ek_bracket(tor, flat, k).abs().maxCoeff() < 1e-12);
}

TEST_CASE("bracket means vanish on random states of both testbeds") {
  RadialEngine eng(2, 160);
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    const auto st = eng.build(radial_poly(eng, 0.03, seed));
    for (int k = 0; k <= 2; ++k) {
      const auto b = ek_bracket(eng, st, k);
      CHECK(std::abs(eng.integrate(st, b) / st.volume) <
            1e-8 * (1.0 + b.abs().maxCoeff()));
    }
  }
  // The identity is a quadrature statement: the grid must resolve the
  // curvature products, which N = 16 does not at this amplitude.
  TorusEngine tor(2, 32);
  for (unsigned seed : {11u, 12u}) {
    const auto st = tor.build(torus_modes(tor, 0.05, seed));
    for (int k = 0; k <= 2; ++k) {
      const auto b = ek_bracket(tor, st, k);
      CHECK(std::abs(tor.integrate(st, b) / st.volume) <
            1e-8 * (1.0 + b.abs().maxCoeff()));
    }
  }
}

TEST_CASE("k = 0 bracket is the scalar-curvature defect") {
  RadialEngine eng(2, 96);
  const auto st = eng.build(radial_poly(eng, 0.02, 9u));
  const auto b = ek_bracket(eng, st, 0);
  CHECK((b - (2.0 * 1.0 - st.sigma[1])).abs().maxCoeff() == 0.0);
}

TEST_CASE("zero and constant potentials carry zero energy") {
  RadialEngine eng(2, 96);
  const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(eng.num_nodes());
  for (int k = 0; k <= 2; ++k) {
    const auto rep = ek_energy(eng, {zero, linear_schedule(), 9}, k);
    CHECK(rep.value == 0.0);
    CHECK(rep.value_alt == 0.0);
  }
  // A constant shift moves along flat directions: B has mean zero.
  const Eigen::ArrayXd c = Eigen::ArrayXd::Constant(eng.num_nodes(), 0.7);
  for (int k = 0; k <= 2; ++k) {
    const auto rep = ek_energy(eng, {c, linear_schedule(), 9}, k);
    CHECK(std::abs(rep.value) < 1e-8);
    CHECK(std::abs(rep.value_alt) < 1e-8);
  }
}

TEST_CASE("constant shifts do not change the energy") {
  RadialEngine eng(2, 96);
  const auto phi = radial_poly(eng, 0.03, 31u);
  const Eigen::ArrayXd shifted = phi + 0.4;
  for (int k : {0, 1, 2}) {
    const double a = ek_energy(eng, {phi, linear_schedule(), 17}, k).value;
    const double b = ek_energy(eng, {shifted, linear_schedule(), 17}, k).value;
    CHECK(std::abs(a - b) < 1e-8 * (1.0 + std::abs(a)));
  }
}

TEST_CASE("both formulas and both schedules agree on the torus") {
  TorusEngine eng(1, 32);
  const auto phi = torus_modes(eng, 0.03, 77u);
  for (int k : {0, 1}) {
    const auto lin = ek_energy(eng, {phi, linear_schedule(), 33}, k);
    const auto sin = ek_energy(eng, {phi, sine_schedule(), 33}, k);
    INFO("k=" << k << " lin=" << lin.value << " sin=" << sin.value
              << " alt=" << lin.value_alt << " qerr=" << lin.quadrature_error);
    CHECK(std::abs(lin.value - lin.value_alt) <
          1e-8 * (1.0 + std::abs(lin.value)));
    CHECK(std::abs(sin.value - sin.value_alt) <
          1e-8 * (1.0 + std::abs(sin.value)));
    CHECK(std::abs(lin.value - sin.value) < 1e-6);
  }
}

TEST_CASE("both formulas and both schedules agree on projective space") {
  RadialEngine eng(2, 128);
  const auto phi = radial_poly(eng, 0.05, 13u);
  for (int k : {0, 1, 2}) {
    const auto rep = path_independence(eng, phi, k, 33);
    INFO("k=" << k << " value=" << rep.value << " delta=" << rep.path_delta);
    CHECK(std::abs(rep.value - rep.value_alt) <
          1e-8 * (1.0 + std::abs(rep.value)));
    CHECK(rep.path_delta < 1e-6);
    CHECK(rep.quadrature_error < 1e-6);
  }
}

TEST_CASE("finite differences of the energy recover the bracket") {
  RadialEngine eng(2, 128);
  const auto phi = radial_poly(eng, 0.03, 41u);
  const auto psi = radial_poly(eng, 1.0, 42u);
  const auto st = eng.build(phi);
  for (int k : {1, 2}) {
    const double exact = ek_rate(eng, st, k, psi);
    double err[2];
    int i = 0;
    for (double eps : {1e-3, 1e-4}) {
      const double ep =
          ek_energy(eng, {Eigen::ArrayXd(phi + eps * psi), linear_schedule(), 33}, k)
              .value;
      const double em =
          ek_energy(eng, {Eigen::ArrayXd(phi - eps * psi), linear_schedule(), 33}, k)
              .value;
      err[i++] = std::abs((ep - em) / (2 * eps) - exact);
    }
    INFO("k=" << k << " err(1e-3)=" << err[0] << " err(1e-4)=" << err[1]);
    const double scale = 1.0 + std::abs(exact);
    // Second-order convergence in eps, allowing a quadrature-noise floor.
    CHECK((err[1] < 2e-2 * err[0] || err[1] < 1e-9 * scale));
    CHECK(err[0] < 1e-4 * scale);
  }
}

TEST_CASE("cocycle discrepancy is small for nested potentials") {
  RadialEngine eng(2, 96);
  const auto psi = radial_poly(eng, 0.02, 51u);
  const auto phi = radial_poly(eng, 0.035, 52u);
  for (int k : {0, 1}) {
    CHECK(cocycle_check(eng, psi, phi, k, 33) < 1e-6);
    // psi = 0 and psi = phi are exact degenerate cases.
    CHECK(cocycle_check(eng, Eigen::ArrayXd(0.0 * psi), phi, k, 9) <
          1e-15);
    CHECK(cocycle_check(eng, phi, phi, k, 9) < 1e-15);
  }
}

TEST_CASE("inadmissible paths are refused with the failing time named") {
  RadialEngine eng(2, 96);
  // Deep well: 1 + b crosses zero near x = 1/2 well before s reaches 1.
  const auto& x = eng.grid().x;
  const Eigen::ArrayXd phi = 15.0 * (x * x * (1.0 - x) * (1.0 - x));
  try {
    ek_energy(eng, {phi, linear_schedule(), 9}, 1);
    FAIL("expected a path admissibility error");
  } catch (const AdmissibilityError& e) {
    CHECK(std::string(e.what()).find("s = ") != std::string::npos);
  }
}

TEST_CASE("energy reports serialize to a single JSON object") {
  TorusEngine eng(1, 16);
  const auto phi = torus_modes(eng, 0.03, 3u);
  auto rep = ek_energy(eng, {phi, sine_schedule(), 9}, 1);
  const std::string js = rep.to_json();
  for (const char* key :
       {"\"k\"", "\"n\"", "\"testbed\"", "\"value\"", "\"value_alt\"",
        "\"path_delta\"", "\"quadrature_error\"", "\"schedule\"", "\"N_t\""})
    CHECK(js.find(key) != std::string::npos);
  CHECK(js.find("\"schedule\": \"sine\"") != std::string::npos);
  CHECK(js.find("null") != std::string::npos);  // no second schedule run
  rep.path_delta = 0.25;
  CHECK(rep.to_json().find("0.25") != std::string::npos);
}

TEST_CASE("energy rejects malformed paths") {
  RadialEngine eng(1, 64);
  const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(eng.num_nodes());
  CHECK_THROWS_AS(ek_energy(eng, {zero, linear_schedule(), 8}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(ek_energy(eng, {zero, linear_schedule(), 1}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(ek_energy(eng, {Eigen::ArrayXd::Zero(3), linear_schedule(), 9}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(ek_bracket(eng, eng.build(zero), 2), std::domain_error);
  CHECK_THROWS_AS(schedule_by_name("cubic"), std::domain_error);
}
