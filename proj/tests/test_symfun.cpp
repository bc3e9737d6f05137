// Symmetric-function layer: recurrence vs. subset enumeration, normalization,
// and the Maclaurin inequality machinery.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "eklab/symfun.hpp"

using eklab::binomial;
using eklab::MaclaurinRegime;
using eklab::Spectrum;

namespace {

// Independent oracle: direct sum over all k-subsets (n <= 8, so at most 256
// masks).  Also reports the sum of |products| as a conditioning scale.
struct BruteResult {
  double value = 0.0;
  double abs_scale = 0.0;
};

BruteResult elem_sym_brute(const std::vector<double>& v, int k) {
  const int n = static_cast<int>(v.size());
  BruteResult r;
  if (k == 0) return {1.0, 1.0};
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != k) continue;
    double p = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) p *= v[static_cast<std::size_t>(i)];
    r.value += p;
    r.abs_scale += std::abs(p);
  }
  r.abs_scale = std::max(r.abs_scale, 1.0);
  return r;
}

}  // namespace

TEST_CASE("elem_sym matches subset enumeration on random spectra") {
  std::mt19937_64 rng(20260814u);
  std::uniform_real_distribution<double> val(-10.0, 10.0);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = dim(rng);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = val(rng);
    const Spectrum lam(std::span<const double>(v.data(), v.size()));
    for (int k = 0; k <= n; ++k) {
      const BruteResult ref = elem_sym_brute(v, k);
      const double got = eklab::elem_sym(lam, k);
      REQUIRE(std::abs(got - ref.value) <= 1e-13 * ref.abs_scale);
    }
  }
}

TEST_CASE("elem_sym hand values") {
  CHECK(eklab::elem_sym(Spectrum{1.0, 1.0, 1.0}, 2) == Catch::Approx(3.0));
  CHECK(eklab::elem_sym(Spectrum{1.0, 2.0, 3.0}, 2) == Catch::Approx(11.0));
  CHECK(eklab::elem_sym(Spectrum{1.0, 2.0, 3.0}, 0) == 1.0);
  CHECK(eklab::elem_sym(Spectrum{1.0, 2.0, 3.0}, 3) == Catch::Approx(6.0));
}

TEST_CASE("elem_sym rejects out-of-range k and bad spectra") {
  CHECK_THROWS_AS(eklab::elem_sym(Spectrum{1.0, 2.0}, 3), std::domain_error);
  CHECK_THROWS_AS(eklab::elem_sym(Spectrum{1.0, 2.0}, -1), std::domain_error);
  std::vector<double> empty;
  CHECK_THROWS_AS(Spectrum(std::span<const double>(empty.data(), 0)),
                  std::domain_error);
  std::vector<double> nine(9, 1.0);
  CHECK_THROWS_AS(Spectrum(std::span<const double>(nine.data(), 9)),
                  std::domain_error);
  CHECK_THROWS_AS((Spectrum{1.0, std::nan("")}), std::domain_error);
}

TEST_CASE("sigma_vector normalization and conventions") {
  const auto z = eklab::sigma_vector(Spectrum{0.0, 0.0, 0.0});
  CHECK(z.sigma[0] == 1.0);  // exact by construction
  CHECK(z.sigma[1] == 0.0);
  CHECK(z.sigma[2] == 0.0);
  CHECK(z.sigma[3] == 0.0);

  const auto s = eklab::sigma_vector(Spectrum{1.0, 2.0, 3.0});
  CHECK(s.normalized[2] == Catch::Approx(11.0 / 3.0).epsilon(1e-14));
  CHECK(s.sig(4) == 0.0);  // sigma_{n+1} convention

  // normalized[k] * C(n,k) reproduces sigma[k].
  std::mt19937_64 rng(7u);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(6);
    for (double& x : v) x = val(rng);
    const auto sv = eklab::sigma_vector(Spectrum(std::span<const double>(v.data(), v.size())));
    for (int k = 0; k <= 6; ++k) {
      const double back = sv.normalized[k] * binomial(6, k);
      REQUIRE(std::abs(back - sv.sigma[k]) <=
              1e-14 * std::max(1.0, std::abs(sv.sigma[k])));
    }
  }
}

TEST_CASE("generating polynomial identity prod(1 + t lambda_i)") {
  std::mt19937_64 rng(99u);
  std::uniform_real_distribution<double> val(0.05, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(5);
    for (double& x : v) x = val(rng);
    const auto s = eklab::sigma_vector(Spectrum(std::span<const double>(v.data(), v.size())));
    for (double t : {-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0}) {
      double lhs = 1.0, scale = 0.0;
      for (double x : v) lhs *= 1.0 + t * x;
      double rhs = 0.0;
      for (int k = 0; k <= 5; ++k) {
        rhs += s.sigma[k] * std::pow(t, k);
        scale += std::abs(s.sigma[k] * std::pow(t, k));
      }
      REQUIRE(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, scale));
    }
  }
}

TEST_CASE("maclaurin_check holds on random positive spectra") {
  std::mt19937_64 rng(123456u);
  std::uniform_real_distribution<double> val(1e-4, 50.0);
  std::uniform_int_distribution<int> dim(2, 8);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = dim(rng);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = val(rng);
    const Spectrum lam(std::span<const double>(v.data(), v.size()));
    for (int k = 0; k < n; ++k) {
      const auto verdict = eklab::maclaurin_check(lam, k);
      REQUIRE(verdict.applicable);
      REQUIRE(verdict.regime == MaclaurinRegime::positive);
      if (!verdict.holds) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("maclaurin_check boundary regime with zero eigenvalues") {
  // lambda = (0, 2, 3), k = 1: Sigma_1 = 5/3, lhs = 25/9 >= Sigma_2 = 2.
  const auto v = eklab::maclaurin_check(Spectrum{0.0, 2.0, 3.0}, 1);
  CHECK(v.applicable);
  CHECK(v.regime == MaclaurinRegime::boundary);
  CHECK(v.holds);
  CHECK(v.lhs == Catch::Approx(25.0 / 9.0).epsilon(1e-13));
  CHECK(v.rhs == Catch::Approx(2.0).epsilon(1e-13));

  // Random nonnegative spectra with forced zeros stay clean whenever the
  // verdict reports a valid regime.
  std::mt19937_64 rng(5150u);
  std::uniform_real_distribution<double> val(0.0, 10.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> w(5);
    for (double& x : w) x = val(rng);
    w[static_cast<std::size_t>(trial % 5)] = 0.0;
    const Spectrum lam(std::span<const double>(w.data(), w.size()));
    for (int k = 0; k < 5; ++k) {
      const auto verdict = eklab::maclaurin_check(lam, k);
      if (verdict.applicable) REQUIRE(verdict.holds);
    }
  }
}

TEST_CASE("maclaurin_check reports mixed-sign spectra as not applicable") {
  const auto v = eklab::maclaurin_check(Spectrum{-1.0, 2.0, 3.0}, 1);
  CHECK_FALSE(v.applicable);
  CHECK(v.regime == MaclaurinRegime::not_applicable);
  // Degenerate nonnegative case below the delta threshold is also refused.
  const auto w = eklab::maclaurin_check(Spectrum{0.0, 0.0, 3.0}, 1, 1e-9);
  CHECK_FALSE(w.applicable);
}

TEST_CASE("maclaurin equality exactly at equal spectra, strict otherwise") {
  for (double c : {0.3, 1.0, 2.5, 7.0}) {
    std::vector<double> v(4, c);
    const Spectrum lam(std::span<const double>(v.data(), v.size()));
    for (int k = 0; k < 4; ++k) {
      const auto verdict = eklab::maclaurin_check(lam, k);
      REQUIRE(verdict.holds);
      const double scale = std::max(std::abs(verdict.lhs), 1e-300);
      REQUIRE(std::abs(verdict.lhs - verdict.rhs) <= 1e-12 * scale);
    }
  }
  // Near-equal spectrum: inequality must be strict and clearly resolved.
  const Spectrum lam{1.0, 1.0, 1.0 + 1e-3};
  for (int k = 0; k < 3; ++k) {
    const auto verdict = eklab::maclaurin_check(lam, k);
    REQUIRE(verdict.holds);
    if (k >= 1)  // k = 0 compares 1 with Sigma_1^0 = 1 identically
      REQUIRE(verdict.lhs - verdict.rhs > 1e-9);
  }
}

TEST_CASE("maclaurin_chain values and monotonicity") {
  const auto chain = eklab::maclaurin_chain(Spectrum{1.0, 2.0, 3.0}, 2);
  REQUIRE(chain.size() == 2);
  CHECK(chain[0] == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(chain[1] == Catch::Approx(std::sqrt(11.0 / 3.0)).epsilon(1e-14));

  std::mt19937_64 rng(31337u);
  std::uniform_real_distribution<double> val(1e-3, 20.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> v(7);
    for (double& x : v) x = val(rng);
    const Spectrum lam(std::span<const double>(v.data(), v.size()));
    const auto c = eklab::maclaurin_chain(lam, 7);
    for (std::size_t j = 1; j < c.size(); ++j)
      REQUIRE(c[j] <= c[j - 1] + 1e-12 * std::max(1.0, c[j - 1]));
  }

  CHECK_THROWS_AS(eklab::maclaurin_chain(Spectrum{-1.0, 2.0}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(eklab::maclaurin_chain(Spectrum{0.0, 0.0}, 2),
                  std::domain_error);
}

TEST_CASE("binomial table") {
  CHECK(binomial(3, 2) == 3.0);
  CHECK(binomial(8, 4) == 70.0);
  CHECK(binomial(5, 0) == 1.0);
  CHECK(binomial(4, 5) == 0.0);  // C(n, n+1) = 0 convention
  CHECK(binomial(2, -1) == 0.0);
}
