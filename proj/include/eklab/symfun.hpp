#pragma once
// Elementary symmetric functions of a pointwise Ricci spectrum, their
// binomial-normalized averages, and the Maclaurin inequality chain used by
// the curvature certificates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eklab {

inline constexpr int max_dim = 8;

// C(n, k); zero outside the Pascal triangle, so C(n, n+1) = 0 and the
// top-degree conventions (sigma_{n+1} == 0) fall out automatically.
// Exact in double precision for every n <= max_dim.
inline constexpr double binomial(int n, int k) {
  if (k < 0 || k > n || n < 0) return 0.0;
  double num = 1.0, den = 1.0;
  for (int j = 1; j <= k; ++j) {
    num *= static_cast<double>(n - k + j);
    den *= static_cast<double>(j);
  }
  return num / den;
}

// Eigenvalues of the Ricci endomorphism relative to the metric at one point.
// The length equals the complex dimension n of the manifold, 1 <= n <= 8.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(std::initializer_list<double> v) {
    assign(std::span<const double>(v.begin(), v.size()));
  }
  explicit Spectrum(std::span<const double> v) { assign(v); }

  int dim() const { return n_; }
  double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const {
    return {v_.data(), static_cast<std::size_t>(n_)};
  }
  double min() const {
    return *std::min_element(v_.begin(), v_.begin() + n_);
  }
  double max() const {
    return *std::max_element(v_.begin(), v_.begin() + n_);
  }

 private:
  void assign(std::span<const double> v) {
    if (v.size() < 1 || v.size() > static_cast<std::size_t>(max_dim))
      throw std::domain_error("Spectrum: dimension must be in [1, 8], got " +
                              std::to_string(v.size()));
    for (double x : v)
      if (!std::isfinite(x))
        throw std::domain_error("Spectrum: non-finite eigenvalue");
    n_ = static_cast<int>(v.size());
    std::copy(v.begin(), v.end(), v_.begin());
  }

  std::array<double, max_dim> v_{};
  int n_ = 0;
};

namespace detail {

// Product recurrence: expand prod_i (1 + t*lambda_i) coefficient-wise,
// accumulating eigenvalues in increasing order.  Fills e[0..n].
inline void elem_sym_all(const Spectrum& lambda,
                         std::array<double, max_dim + 1>& e) {
  const int n = lambda.dim();
  std::array<double, max_dim> v{};
  std::copy(lambda.values().begin(), lambda.values().end(), v.begin());
  std::sort(v.begin(), v.begin() + n);
  e.fill(0.0);
  e[0] = 1.0;
  for (int m = 0; m < n; ++m)
    for (int j = std::min(m + 1, n); j >= 1; --j) e[j] += v[m] * e[j - 1];
}

}  // namespace detail

// k-th elementary symmetric function e_k(lambda), 0 <= k <= n.
inline double elem_sym(const Spectrum& lambda, int k) {
  if (k < 0 || k > lambda.dim())
    throw std::domain_error("elem_sym: k = " + std::to_string(k) +
                            " out of range for dimension " +
                            std::to_string(lambda.dim()));
  std::array<double, max_dim + 1> e{};
  detail::elem_sym_all(lambda, e);
  return e[k];
}

// All sigma_k = e_k(lambda) together with the binomial-normalized averages
// Sigma_k = sigma_k / C(n,k).  Entries above n are zero by convention.
struct SigmaVector {
  int n = 0;
  std::array<double, max_dim + 1> sigma{};       // sigma[0] = 1 exactly
  std::array<double, max_dim + 1> normalized{};  // Sigma_k

  double sig(int k) const { return k <= n ? sigma[k] : 0.0; }
  double norm(int k) const { return k <= n ? normalized[k] : 0.0; }
};

inline SigmaVector sigma_vector(const Spectrum& lambda) {
  SigmaVector out;
  out.n = lambda.dim();
  detail::elem_sym_all(lambda, out.sigma);
  for (int k = 0; k <= out.n; ++k)
    out.normalized[k] = out.sigma[k] / binomial(out.n, k);
  return out;
}

enum class MaclaurinRegime { positive, boundary, not_applicable };

inline const char* to_string(MaclaurinRegime r) {
  switch (r) {
    case MaclaurinRegime::positive: return "positive";
    case MaclaurinRegime::boundary: return "boundary";
    default: return "not_applicable";
  }
}

struct MaclaurinVerdict {
  bool applicable = false;  // spectrum fell in one of the two valid regimes
  bool holds = false;       // Sigma_k^{k+1} >= Sigma_{k+1}^k (roundoff slack)
  MaclaurinRegime regime = MaclaurinRegime::not_applicable;
  double lhs = 0.0;  // Sigma_k^{k+1}
  double rhs = 0.0;  // Sigma_{k+1}^k
};

// Newton–Maclaurin comparison Sigma_k^{k+1} >= Sigma_{k+1}^k.  Valid when
// every eigenvalue is positive, or in the boundary regime where eigenvalues
// are merely nonnegative but Sigma_{k+1} stays above `delta`.  Any other
// sign pattern yields a not-applicable verdict instead of a trusted answer.
inline MaclaurinVerdict maclaurin_check(const Spectrum& lambda, int k,
                                        double delta = 1e-9) {
  const int n = lambda.dim();
  if (k < 0 || k >= n)
    throw std::domain_error("maclaurin_check: k = " + std::to_string(k) +
                            " out of range for dimension " + std::to_string(n));
  const SigmaVector s = sigma_vector(lambda);
  MaclaurinVerdict v;
  v.lhs = std::pow(s.normalized[k], k + 1);
  v.rhs = std::pow(s.normalized[k + 1], k);
  const double mn = lambda.min();
  if (mn > 0.0)
    v.regime = MaclaurinRegime::positive;
  else if (mn == 0.0 && s.normalized[k + 1] > delta)
    v.regime = MaclaurinRegime::boundary;
  else
    v.regime = MaclaurinRegime::not_applicable;
  v.applicable = v.regime != MaclaurinRegime::not_applicable;
  // Slack absorbs the roundoff of the recurrence plus the powers; genuine
  // violations in the valid regimes are impossible, so anything below the
  // slack is numerical noise, anything above it is a defect signal.
  const double slack =
      1e-12 * std::max({std::abs(v.lhs), std::abs(v.rhs), 1e-300});
  v.holds = v.applicable && v.lhs >= v.rhs - slack;
  return v;
}

// The chain (Sigma_1, Sigma_2^{1/2}, ..., Sigma_k^{1/k}), which is
// non-increasing for nonnegative spectra.  Requires Sigma_k > 0 so every
// root is taken of a positive number.
inline std::vector<double> maclaurin_chain(const Spectrum& lambda, int k) {
  const int n = lambda.dim();
  if (k < 1 || k > n)
    throw std::domain_error("maclaurin_chain: k = " + std::to_string(k) +
                            " out of range for dimension " + std::to_string(n));
  if (lambda.min() < 0.0)
    throw std::domain_error("maclaurin_chain: negative eigenvalue " +
                            std::to_string(lambda.min()));
  const SigmaVector s = sigma_vector(lambda);
  if (!(s.normalized[k] > 0.0))
    throw std::domain_error("maclaurin_chain: Sigma_k must be positive, got " +
                            std::to_string(s.normalized[k]));
  std::vector<double> chain(static_cast<std::size_t>(k));
  for (int j = 1; j <= k; ++j) {
    // With nonnegative eigenvalues and Sigma_k > 0 every lower Sigma_j is
    // strictly positive; a nonpositive value here means corrupted state.
    if (!(s.normalized[j] > 0.0))
      throw std::logic_error(
          "maclaurin_chain: internal consistency failure, Sigma_" +
          std::to_string(j) + " = " + std::to_string(s.normalized[j]) +
          " despite Sigma_" + std::to_string(k) + " > 0");
    chain[static_cast<std::size_t>(j - 1)] =
        std::pow(s.normalized[j], 1.0 / static_cast<double>(j));
  }
  return chain;
}

}  // namespace eklab
