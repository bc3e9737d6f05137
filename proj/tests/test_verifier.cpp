#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "eklab/critic.hpp"
#include "eklab/radial.hpp"
#include "eklab/torus.hpp"
#include "eklab/verifier.hpp"

using namespace eklab;

namespace {

Eigen::ArrayXd bump(const RadialEngine& eng, double amp) {
  const auto& x = eng.grid().x;
  return amp * (x * (1.0 - x)).square();
}

bool has_step(const Certificate& c, const std::string& name) {
  for (const auto& s : c.steps)
    if (s.name == name) return true;
  return false;
}

const CertificateStep& step(const Certificate& c, const std::string& name) {
  for (const auto& s : c.steps)
    if (s.name == name) return s;
  throw std::logic_error("missing step " + name);
}

}  // namespace

TEST_CASE("the reference metric is certified for every k and dimension") {
  for (int n : {1, 2, 3}) {
    RadialEngine eng(n, 256);
    const auto fs = eng.build(Eigen::ArrayXd::Zero(256));
    for (int k = 0; k <= n; ++k) {
      const Certificate c = theorem_certificate(eng, fs, k, 1e-5);
      CAPTURE(n, k);
      CHECK(c.passed);
      CHECK(c.overall() == "PASS");
      CHECK(c.first_failure.empty());
      CHECK(c.ke_deviation <= 1e-6);
      CHECK(c.f_deviation <= 1e-6);
      // A unit-spectrum, zero-residual state stays sound at a much
      // tighter tolerance.
      CHECK(theorem_certificate(eng, fs, k, 1e-8).passed);
    }
  }
}

TEST_CASE("a non-critical perturbation fails first at criticality") {
  RadialEngine eng(2, 256);
  const auto st = eng.build(bump(eng, 0.05));
  for (int k = 0; k <= 2; ++k) {
    const Certificate c = theorem_certificate(eng, st, k, 1e-5);
    CAPTURE(k);
    CHECK_FALSE(c.passed);
    CHECK(c.first_failure == "criticality");
    CHECK(c.overall() == "FAIL(criticality)");
    CHECK(step(c, "criticality").value > 10.0 * 1e-5);
  }
}

TEST_CASE("certificate steps follow the proof order and specialize") {
  RadialEngine eng(2, 192);
  const auto fs = eng.build(Eigen::ArrayXd::Zero(192));

  const Certificate c0 = theorem_certificate(eng, fs, 0);
  CHECK(c0.steps.front().name == "criticality");
  CHECK_FALSE(has_step(c0, "maclaurin_floor"));
  CHECK_FALSE(has_step(c0, "maclaurin_chain_order"));
  CHECK(has_step(c0, "ricci_nonnegative"));
  CHECK(has_step(c0, "ricci_potential_laplacian"));
  CHECK(has_step(c0, "ricci_potential_oscillation"));

  const Certificate c1 = theorem_certificate(eng, fs, 1);
  CHECK(has_step(c1, "scalar_curvature_above_minus_n"));
  CHECK_FALSE(has_step(c1, "ricci_nonnegative"));
  CHECK(step(c1, "scalar_curvature_above_minus_n").threshold ==
        Catch::Approx(-2.0 + 1e-5));

  // k = n: criticality measures the Laplacian of sigma_n and the minimum
  // principle pins Sigma_n itself.
  const Certificate c2 = theorem_certificate(eng, fs, 2);
  const Eigen::ArrayXd lap_sn = eng.laplacian(fs, fs.sigma[2]);
  CHECK(step(c2, "criticality").value ==
        Catch::Approx(fs.sup_window(lap_sn)).margin(1e-14));
  CHECK(step(c2, "minimum_principle_next").value >= 1.0 - 1e-5);
  CHECK(has_step(c2, "maclaurin_floor"));
}

TEST_CASE("a passing certificate pins the normalized functions nodewise") {
  RadialEngine eng(3, 256);
  const auto fs = eng.build(Eigen::ArrayXd::Zero(256));
  for (int k = 1; k <= 3; ++k) {
    const Certificate c = theorem_certificate(eng, fs, k, 1e-5);
    REQUIRE(c.passed);
    double mn = 1e300;
    for (int j = 0; j < 256; ++j)
      if (fs.in_window(j))
        mn = std::min(mn, fs.normalized[static_cast<std::size_t>(k)][j]);
    CAPTURE(k);
    CHECK(mn >= 1.0 - 2e-5);
  }
}

TEST_CASE("certificates reject the torus testbed") {
  TorusEngine eng(1, 16);
  const auto flat = eng.build(Eigen::ArrayXd::Zero(eng.num_nodes()));
  CHECK_THROWS_WITH(theorem_certificate(eng, flat, 1),
                    Catch::Matchers::ContainsSubstring(
                        "theorem not applicable"));
}

TEST_CASE("certificate argument validation") {
  RadialEngine eng(2, 64);
  const auto fs = eng.build(Eigen::ArrayXd::Zero(64));
  CHECK_THROWS_AS(theorem_certificate(eng, fs, -1), std::domain_error);
  CHECK_THROWS_AS(theorem_certificate(eng, fs, 3), std::domain_error);
  CHECK_THROWS_AS(theorem_certificate(eng, fs, 1, 0.0), std::domain_error);
}

TEST_CASE("einstein deviation norms") {
  RadialEngine eng(2, 256);
  const auto fs = eng.build(Eigen::ArrayXd::Zero(256));
  const auto at_fs = ke_deviation(eng, fs);
  CHECK(at_fs.first <= 1e-6);
  CHECK(at_fs.second <= 1e-6);

  const auto perturbed = ke_deviation(eng, eng.build(bump(eng, 0.01)));
  CHECK(perturbed.first > 0.0);
  CHECK(perturbed.first < 0.5);

  // Synthetic unit-spectrum injection: deviations vanish identically.
  auto synthetic = fs;
  synthetic.lam_trans.setOnes();
  synthetic.lam_rad.setOnes();
  synthetic.f.setZero();
  const auto injected = ke_deviation(eng, synthetic);
  CHECK(injected.first == 0.0);
  CHECK(injected.second == 0.0);
}

TEST_CASE("converged flows produce passing certificates") {
  RadialEngine eng(2, 256);
  FlowConfig cfg;
  cfg.k = 1;
  cfg.max_iters = 2000;
  const auto tr = gradient_flow(eng, bump(eng, 0.05), cfg);
  REQUIRE(tr.reason == FlowStop::converged);
  REQUIRE(tr.last().min_ricci_eig >= -1e-6);
  const auto end = eng.build(tr.final_potential);
  const Certificate c = theorem_certificate(eng, end, 1, 1e-5);
  CHECK(c.passed);
  CHECK(c.ke_deviation <= 1e-3);
}

TEST_CASE("certificates serialize to JSON with one object per step") {
  RadialEngine eng(2, 128);
  const auto fs = eng.build(Eigen::ArrayXd::Zero(128));
  const Certificate c = theorem_certificate(eng, fs, 1);
  const std::string json = c.to_json();
  CHECK(json.find("\"overall\": \"PASS\"") != std::string::npos);
  CHECK(json.find("\"ke_deviation\"") != std::string::npos);
  for (const auto& s : c.steps)
    CHECK(json.find("\"name\": \"" + s.name + "\"") != std::string::npos);
  CHECK(json.find("\"node_index\"") != std::string::npos);
  CHECK(json.find("\"verdict\": \"pass\"") != std::string::npos);

  const auto bad = eng.build(bump(eng, 0.05));
  const std::string fail_json = theorem_certificate(eng, bad, 1).to_json();
  CHECK(fail_json.find("FAIL(criticality)") != std::string::npos);
  CHECK(fail_json.find("\"verdict\": \"fail\"") != std::string::npos);
}
