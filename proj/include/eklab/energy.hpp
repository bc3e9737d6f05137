#pragma once
// Path-quadrature evaluation of the E_k energies.  The derivative of E_k
// along a potential path phi_s is
//
//   dE/ds = (1/V) \int phidot_s * B_k(omega_s) omega_s^n,
//   B_k   = (k+1)/C(n,k) * (lap sigma_k - sigma_{k+1}) + (n-k) mu_k,
//
// and an integration by parts gives the equivalent two-term rate
//
//   dE/ds = (k+1)/V \int (lap phidot) Sigma_k - (n-k)/V \int phidot (Sigma_{k+1} - mu_k).
//
// Both are integrated in s with composite Simpson; their agreement and the
// independence of the schedule are measured, not assumed.

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "eklab/errors.hpp"
#include "eklab/symfun.hpp"

namespace eklab {

// Class constant mu_k: the normalized k+1-fold curvature pairing of the
// background class.  Anticanonically polarized projective space gives 1,
// the flat torus class gives 0.
inline double mu_k(const std::string& testbed, int n, int k) {
  if (k < 0 || k > n)
    throw std::domain_error("mu_k: k = " + std::to_string(k) +
                            " out of range [0, " + std::to_string(n) + "]");
  if (testbed == "projective") return 1.0;
  if (testbed == "torus") return 0.0;
  throw std::domain_error("mu_k: unknown testbed '" + testbed + "'");
}

// Quadrature cross-check of mu_k on a concrete state.
template <class Engine>
double mu_from_state(const Engine& eng, const typename Engine::State& st,
                     int k) {
  if (k < 0 || k >= st.n)
    throw std::domain_error("mu_from_state: need 0 <= k < n");
  return eng.integrate(st, st.normalized[static_cast<std::size_t>(k + 1)]) /
         st.volume;
}

struct PathSchedule {
  std::string name;
  std::function<double(double)> c;     // scale factor, c(0)=0, c(1)=1
  std::function<double(double)> cdot;  // its derivative
};

inline PathSchedule linear_schedule() {
  return {"linear", [](double s) { return s; }, [](double) { return 1.0; }};
}

inline PathSchedule sine_schedule() {
  return {"sine",
          [](double s) {
            const double h = std::sin(0.5 * std::numbers::pi * s);
            return h * h;
          },
          [](double s) {
            return 0.5 * std::numbers::pi * std::sin(std::numbers::pi * s);
          }};
}

inline PathSchedule schedule_by_name(const std::string& name) {
  if (name == "linear") return linear_schedule();
  if (name == "sine") return sine_schedule();
  throw std::domain_error("unknown schedule '" + name +
                          "' (expected linear or sine)");
}

struct PathSpec {
  Eigen::ArrayXd phi;
  PathSchedule schedule = linear_schedule();
  int steps = 33;  // Simpson nodes in s, odd and >= 3
};

struct EnergyReport {
  int k = 0;
  int n = 0;
  std::string testbed;
  std::string schedule;
  int nt = 0;
  double value = 0.0;
  double value_alt = 0.0;
  double path_delta = std::numeric_limits<double>::quiet_NaN();
  double quadrature_error = 0.0;

  std::string to_json() const {
    char buf[512];
    const auto num = [](double v, char* s, std::size_t cap) {
      if (std::isnan(v))
        std::snprintf(s, cap, "null");
      else
        std::snprintf(s, cap, "%.17g", v);
    };
    char v1[32], v2[32], v3[32], v4[32];
    num(value, v1, sizeof v1);
    num(value_alt, v2, sizeof v2);
    num(path_delta, v3, sizeof v3);
    num(quadrature_error, v4, sizeof v4);
    std::snprintf(buf, sizeof buf,
                  "{\"k\": %d, \"n\": %d, \"testbed\": \"%s\", \"value\": %s, "
                  "\"value_alt\": %s, \"path_delta\": %s, "
                  "\"quadrature_error\": %s, \"schedule\": \"%s\", "
                  "\"N_t\": %d}",
                  k, n, testbed.c_str(), v1, v2, v3, v4, schedule.c_str(), nt);
    return buf;
  }
};

// First variation of E_k as a field: the L2 gradient against omega^n.
template <class Engine>
Eigen::ArrayXd ek_bracket(const Engine& eng, const typename Engine::State& st,
                          int k) {
  const int n = st.n;
  if (k < 0 || k > n)
    throw std::domain_error("ek_bracket: k = " + std::to_string(k) +
                            " out of range [0, " + std::to_string(n) + "]");
  Eigen::ArrayXd b;
  if (k == 0) {
    // sigma_0 == 1 is harmonic, so only the zeroth-order terms survive.
    b = n * eng.mu(0) - st.sigma[1];
  } else {
    const double pref = (k + 1.0) / binomial(n, k);
    Eigen::ArrayXd lap_sig =
        eng.laplacian(st, st.sigma[static_cast<std::size_t>(k)]);
    if (k < n) lap_sig -= st.sigma[static_cast<std::size_t>(k + 1)];
    b = pref * lap_sig + (n - k) * eng.mu(k);
  }
#ifdef EKLAB_INTERNAL_CHECKS
  const double mean = eng.integrate(st, b) / st.volume;
  const double scale = 1.0 + b.abs().maxCoeff();
  if (!(std::abs(mean) <= 1e-8 * scale))
    throw std::logic_error("ek_bracket: mean " + std::to_string(mean) +
                           " violates the cohomological zero identity");
#endif
  return b;
}

// dE_k/ds for a given state and path velocity, bracket form.
template <class Engine>
double ek_rate(const Engine& eng, const typename Engine::State& st, int k,
               const Eigen::ArrayXd& phidot) {
  return eng.integrate(st, Eigen::ArrayXd(phidot * ek_bracket(eng, st, k))) /
         st.volume;
}

// Same rate in the two-term form (independent code path via lap(phidot)).
template <class Engine>
double ek_rate_two_term(const Engine& eng, const typename Engine::State& st,
                        int k, const Eigen::ArrayXd& phidot,
                        const Eigen::ArrayXd& lap_phidot) {
  const int n = st.n;
  const double V = st.volume;
  double rate = (k + 1.0) *
                eng.integrate(st, Eigen::ArrayXd(lap_phidot *
                                                 st.normalized[static_cast<
                                                     std::size_t>(k)])) /
                V;
  if (k < n) {
    Eigen::ArrayXd tail =
        st.normalized[static_cast<std::size_t>(k + 1)] - eng.mu(k);
    rate -= (n - k) * eng.integrate(st, Eigen::ArrayXd(phidot * tail)) / V;
  }
  return rate;
}

namespace detail {

inline double simpson(const std::vector<double>& h, int stride, double dx) {
  // Composite Simpson over h[0], h[stride], ... (odd count).
  const int count = (static_cast<int>(h.size()) - 1) / stride + 1;
  if (count < 3 || count % 2 == 0)
    throw std::logic_error("simpson: need an odd node count >= 3");
  double acc = h.front() + h.back();
  for (int j = 1; j < count - 1; ++j)
    acc += h[static_cast<std::size_t>(j * stride)] * (j % 2 ? 4.0 : 2.0);
  return acc * dx / 3.0;
}

}  // namespace detail

// Energies for several k over one path, building each intermediate state
// once.  The integrand is sampled on the refined grid with 2*steps - 1
// nodes; the reported value uses the requested grid and the refinement
// serves as the Richardson error estimate.
template <class Engine>
std::vector<EnergyReport> ek_energy_sweep(const Engine& eng,
                                          const PathSpec& path,
                                          const std::vector<int>& ks) {
  if (path.steps < 3 || path.steps % 2 == 0)
    throw std::domain_error("ek_energy: steps must be odd and >= 3");
  if (path.phi.size() != eng.num_nodes())
    throw std::invalid_argument("ek_energy: potential size mismatch");
  const int fine = 2 * path.steps - 1;
  const auto cache = eng.make_path_cache(path.phi);

  std::vector<std::vector<double>> rate(ks.size()),
      rate_alt(ks.size());
  for (auto& r : rate) r.resize(static_cast<std::size_t>(fine));
  for (auto& r : rate_alt) r.resize(static_cast<std::size_t>(fine));

  for (int j = 0; j < fine; ++j) {
    const double s = static_cast<double>(j) / (fine - 1);
    typename Engine::State st;
    try {
      st = eng.build_scaled(cache, path.schedule.c(s));
    } catch (const AdmissibilityError& e) {
      throw AdmissibilityError("path '" + path.schedule.name +
                                   "' leaves the admissible cone at s = " +
                                   std::to_string(s) + ": " + e.what(),
                               e.worst_node, e.min_eigenvalue);
    }
    const Eigen::ArrayXd phidot = path.schedule.cdot(s) * path.phi;
    const Eigen::ArrayXd lap_phidot = eng.laplacian(st, phidot);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      rate[i][static_cast<std::size_t>(j)] = ek_rate(eng, st, ks[i], phidot);
      rate_alt[i][static_cast<std::size_t>(j)] =
          ek_rate_two_term(eng, st, ks[i], phidot, lap_phidot);
    }
  }

  std::vector<EnergyReport> out;
  const double dx_coarse = 1.0 / (path.steps - 1);
  const double dx_fine = 1.0 / (fine - 1);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    EnergyReport rep;
    rep.k = ks[i];
    rep.n = eng.complex_dim();
    rep.testbed = Engine::testbed_name();
    rep.schedule = path.schedule.name;
    rep.nt = path.steps;
    rep.value = detail::simpson(rate[i], 2, dx_coarse);
    rep.value_alt = detail::simpson(rate_alt[i], 2, dx_coarse);
    rep.quadrature_error =
        std::abs(detail::simpson(rate[i], 1, dx_fine) - rep.value);
    out.push_back(std::move(rep));
  }
  return out;
}

template <class Engine>
EnergyReport ek_energy(const Engine& eng, const PathSpec& path, int k) {
  return ek_energy_sweep(eng, path, {k}).front();
}

// Path independence measured directly: same target, two schedules.
template <class Engine>
EnergyReport path_independence(const Engine& eng, const Eigen::ArrayXd& phi,
                               int k, int steps = 33) {
  EnergyReport lin = ek_energy(eng, {phi, linear_schedule(), steps}, k);
  const EnergyReport sin = ek_energy(eng, {phi, sine_schedule(), steps}, k);
  lin.path_delta = std::abs(lin.value - sin.value);
  return lin;
}

// Cocycle discrepancy |E(phi) - E(psi) - E_rebased(phi - psi)|.
template <class Engine>
double cocycle_check(const Engine& eng, const Eigen::ArrayXd& psi,
                     const Eigen::ArrayXd& phi, int k, int steps = 33) {
  const double e_phi = ek_energy(eng, {phi, linear_schedule(), steps}, k).value;
  const double e_psi = ek_energy(eng, {psi, linear_schedule(), steps}, k).value;
  const Engine based = eng.rebased(psi);
  const double e_diff =
      ek_energy(based, {Eigen::ArrayXd(phi - psi), linear_schedule(), steps},
                k)
          .value;
  return std::abs(e_phi - e_psi - e_diff);
}

}  // namespace eklab
