#pragma once
// Kähler-Einstein certificate for critical metrics.
//
// A critical metric of E_k in the anticanonical class with nonnegative
// Ricci curvature is Kähler-Einstein.  theorem_certificate replays that
// chain quantitatively on a discrete state, step by step in proof order:
//
//   (1) criticality        sup |r_k| <= tol
//   (2) curvature bound    min Ricci eigenvalue >= -tol
//                          (k = 1 needs only min R >= -n + tol)
//   (3) minimum principle  at p = argmin Sigma_k the residual forces
//                          Sigma_{k+1}(p) >= 1 - tol since lap sigma_k(p)
//                          cannot be negative at a minimum (k = n: the
//                          criticality step makes sigma_n itself constant,
//                          so Sigma_n(p) >= 1 - tol directly)
//   (4) Maclaurin chain    Sigma_1 >= Sigma_k^{1/k} >= 1 - tol nodewise,
//                          propagating the minimum to every node (absent
//                          for k = 0, where (1) already pins R)
//   (5) Ricci potential    R = n + lap f with f mean zero, so (1)-(4) give
//                          lap f >= -tol with zero mean: both ||lap f||_inf
//                          and ||f||_inf must collapse (x10 tolerance, a
//                          documented convention in lieu of an elliptic
//                          constant)
//
// The conclusion is reported as ke_deviation = max nodewise |lambda_i - 1|
// together with f_deviation = ||f - mean f||_inf; a certificate PASSES iff
// every step passes.  States from the torus testbed are rejected: with
// vanishing first Chern class there is no anticanonical normalization and
// the chain above has no content.

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eklab/critic.hpp"
#include "eklab/symfun.hpp"

namespace eklab {

struct CertificateStep {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool lower_bound = true;  // pass iff value >= threshold (else <=)
  bool passed = false;
  std::int64_t node = -1;  // extremal node index where meaningful

  std::string to_json() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "{\"name\": \"%s\", \"value\": %.17g, \"threshold\": %.17g, "
                  "\"bound\": \"%s\", \"verdict\": \"%s\"",
                  name.c_str(), value, threshold,
                  lower_bound ? "lower" : "upper", passed ? "pass" : "fail");
    std::string out = buf;
    if (node >= 0) {
      std::snprintf(buf, sizeof buf, ", \"node_index\": %lld",
                    static_cast<long long>(node));
      out += buf;
    }
    return out + "}";
  }
};

struct Certificate {
  int k = 0;
  int n = 0;
  double tol = 0.0;
  std::vector<CertificateStep> steps;
  bool passed = false;
  std::string first_failure;  // empty iff passed
  double ke_deviation = 0.0;  // max nodewise |lambda_i - 1|
  double f_deviation = 0.0;   // ||f - mean f||_inf

  std::string overall() const {
    return passed ? "PASS" : "FAIL(" + first_failure + ")";
  }

  std::string to_json() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "{\"k\": %d, \"n\": %d, \"tol\": %.17g, \"overall\": "
                  "\"%s\", \"ke_deviation\": %.17g, \"f_deviation\": %.17g, "
                  "\"steps\": [",
                  k, n, tol, overall().c_str(), ke_deviation, f_deviation);
    std::string out = buf;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (i) out += ", ";
      out += steps[i].to_json();
    }
    return out + "]}";
  }
};

// Deviation of a state from Kähler-Einstein: max |lambda_i - 1| over window
// nodes and the sup-norm of the mean-zero Ricci potential.
template <class Engine>
std::pair<double, double> ke_deviation(const Engine& eng,
                                       const typename Engine::State& st) {
  double lam_dev = 0.0;
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(st.num_nodes()); ++j) {
    if (!st.in_window(static_cast<int>(j))) continue;
    const Spectrum lam = st.spectrum(static_cast<int>(j));
    for (int i = 0; i < lam.dim(); ++i)
      lam_dev = std::max(lam_dev, std::abs(lam[i] - 1.0));
  }
  Eigen::ArrayXd f = eng.ricci_potential(st);
  f -= eng.integrate(st, f) / st.volume;
  return {lam_dev, st.sup_window(f)};
}

template <class Engine>
Certificate theorem_certificate(const Engine& eng,
                                const typename Engine::State& st, int k,
                                double tol = 1e-5) {
  if (std::string_view(Engine::testbed_name()) != "projective")
    throw std::domain_error(
        "theorem not applicable: the certificate requires the anticanonical "
        "class (mu_k = 1), but the '" +
        std::string(Engine::testbed_name()) +
        "' testbed has vanishing first Chern class");
  const int n = st.n;
  if (k < 0 || k > n)
    throw std::domain_error("theorem_certificate: k = " + std::to_string(k) +
                            " out of range [0, " + std::to_string(n) + "]");
  if (!(tol > 0.0))
    throw std::domain_error("theorem_certificate: tol must be > 0");

  Certificate cert;
  cert.k = k;
  cert.n = n;
  cert.tol = tol;

  const auto push = [&cert](std::string name, double value, double threshold,
                            bool lower_bound, std::int64_t node = -1) {
    CertificateStep s;
    s.name = std::move(name);
    s.value = value;
    s.threshold = threshold;
    s.lower_bound = lower_bound;
    s.node = node;
    s.passed = lower_bound ? value >= threshold : value <= threshold;
    cert.steps.push_back(std::move(s));
  };
  const int P = static_cast<int>(st.num_nodes());

  // (1) criticality
  {
    const Eigen::ArrayXd r = critical_residual(eng, st, k);
    double sup = 0.0;
    std::int64_t at = -1;
    for (int j = 0; j < P; ++j)
      if (st.in_window(j) && std::abs(r[j]) > sup) {
        sup = std::abs(r[j]);
        at = j;
      }
    push("criticality", sup, tol, false, at);
  }

  // (2) curvature hypothesis
  if (k == 1) {
    double mn = std::numeric_limits<double>::infinity();
    std::int64_t at = -1;
    for (int j = 0; j < P; ++j)
      if (st.in_window(j) && st.sigma[1][j] < mn) {
        mn = st.sigma[1][j];
        at = j;
      }
    push("scalar_curvature_above_minus_n", mn, -n + tol, true, at);
  } else {
    double mn = std::numeric_limits<double>::infinity();
    std::int64_t at = -1;
    for (int j = 0; j < P; ++j) {
      if (!st.in_window(j)) continue;
      const double m = st.spectrum(j).min();
      if (m < mn) {
        mn = m;
        at = j;
      }
    }
    push("ricci_nonnegative", mn, -tol, true, at);
  }

  // (3) minimum principle at the argmin of Sigma_k
  {
    const Eigen::ArrayXd& sk = st.normalized[static_cast<std::size_t>(k)];
    std::int64_t p = -1;
    double mn = std::numeric_limits<double>::infinity();
    for (int j = 0; j < P; ++j)
      if (st.in_window(j) && sk[j] < mn) {
        mn = sk[j];
        p = j;
      }
    const Eigen::ArrayXd lap_sk =
        eng.laplacian(st, st.sigma[static_cast<std::size_t>(k)]);
    push("minimum_principle_laplacian", lap_sk[p], -tol, true, p);
    const int kk = std::min(k + 1, n);  // k = n: sigma_n itself is pinned
    push("minimum_principle_next",
         st.normalized[static_cast<std::size_t>(kk)][p], 1.0 - tol, true, p);
  }

  // (4) Maclaurin chain, propagating the minimum to every node.  Near the
  // nonnegativity boundary Sigma_k can round below zero; the odd root
  // extension turns that into an honest shortfall instead of a NaN.
  if (k >= 1) {
    const auto root = [](double v, int m) {
      return v < 0.0 ? -std::pow(-v, 1.0 / m) : std::pow(v, 1.0 / m);
    };
    const Eigen::ArrayXd& s1 = st.normalized[1];
    const Eigen::ArrayXd& sk = st.normalized[static_cast<std::size_t>(k)];
    double floor_val = std::numeric_limits<double>::infinity();
    double chain_gap = std::numeric_limits<double>::infinity();
    std::int64_t floor_at = -1;
    for (int j = 0; j < P; ++j) {
      if (!st.in_window(j)) continue;
      const double rk = root(sk[j], k);
      if (rk < floor_val) {
        floor_val = rk;
        floor_at = j;
      }
      chain_gap = std::min(chain_gap, s1[j] - rk);
    }
    push("maclaurin_chain_order", chain_gap, -tol, true);
    push("maclaurin_floor", floor_val, 1.0 - tol, true, floor_at);
  }

  // (5) Ricci potential: R = n + lap f forces lap f >= -tol under (1)-(4),
  // and its volume mean is zero, so both norms must collapse.
  {
    Eigen::ArrayXd f = eng.ricci_potential(st);
    f -= eng.integrate(st, f) / st.volume;
    const Eigen::ArrayXd lf = eng.laplacian(st, f);
    push("ricci_potential_laplacian", st.sup_window(lf), 10.0 * tol, false);
    push("ricci_potential_oscillation", st.sup_window(f), 10.0 * tol, false);
  }

  const auto dev = ke_deviation(eng, st);
  cert.ke_deviation = dev.first;
  cert.f_deviation = dev.second;
  cert.passed = true;
  for (const CertificateStep& s : cert.steps)
    if (!s.passed) {
      cert.passed = false;
      cert.first_failure = s.name;
      break;
    }
  return cert;
}

}  // namespace eklab
