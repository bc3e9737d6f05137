#pragma once
// Flat-torus testbed: potentials live on a uniform periodic grid over the
// unit torus of complex dimension n (2n real axes, axis 2i = Re z_i,
// axis 2i+1 = Im z_i).  The metric is g = I + complex Hessian of phi, the
// Ricci form is the complex Hessian of -log det g, and the pointwise
// spectrum solves the Hermitian-definite pencil det(Ric - lambda g) = 0
// through a Cholesky whitening of g.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "eklab/errors.hpp"
#include "eklab/fourier.hpp"
#include "eklab/parallel.hpp"
#include "eklab/symfun.hpp"

namespace eklab {

namespace hermitian {

// Dense Hermitian work on tiny matrices (n <= 3), kept allocation-free for
// the per-node hot loops.
using cplx = std::complex<double>;

template <int NC>
struct Mat {
  cplx a[NC][NC];
};

// In-place lower Cholesky; returns false on a nonpositive pivot.
template <int NC>
inline bool cholesky(const Mat<NC>& g, Mat<NC>& L) {
  for (int i = 0; i < NC; ++i)
    for (int j = 0; j < NC; ++j) L.a[i][j] = cplx(0.0, 0.0);
  for (int j = 0; j < NC; ++j) {
    double d = g.a[j][j].real();
    for (int p = 0; p < j; ++p) d -= std::norm(L.a[j][p]);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double s = std::sqrt(d);
    L.a[j][j] = cplx(s, 0.0);
    for (int i = j + 1; i < NC; ++i) {
      cplx v = g.a[i][j];
      for (int p = 0; p < j; ++p) v -= L.a[i][p] * std::conj(L.a[j][p]);
      L.a[i][j] = v / s;
    }
  }
  return true;
}

// B = L^-1 H L^-H for Hermitian H (used for pencil whitening and traces).
template <int NC>
inline Mat<NC> whiten(const Mat<NC>& L, const Mat<NC>& H) {
  Mat<NC> X;  // X = L^-1 H  (forward substitution on each column)
  for (int c = 0; c < NC; ++c)
    for (int r = 0; r < NC; ++r) {
      cplx v = H.a[r][c];
      for (int p = 0; p < r; ++p) v -= L.a[r][p] * X.a[p][c];
      X.a[r][c] = v / L.a[r][r].real();
    }
  Mat<NC> B;  // B = X L^-H: solve B L^H = X row-wise (back substitution)
  for (int r = 0; r < NC; ++r)
    for (int c = 0; c < NC; ++c) {
      cplx v = X.a[r][c];
      for (int p = 0; p < c; ++p) v -= B.a[r][p] * std::conj(L.a[c][p]);
      B.a[r][c] = v / L.a[c][c].real();
    }
  return B;
}

inline void eigenvalues(const Mat<1>& h, double* out) {
  out[0] = h.a[0][0].real();
}

inline void eigenvalues(const Mat<2>& h, double* out) {
  const double m = 0.5 * (h.a[0][0].real() + h.a[1][1].real());
  const double d = 0.5 * (h.a[0][0].real() - h.a[1][1].real());
  const double r = std::sqrt(d * d + std::norm(h.a[0][1]));
  out[0] = m - r;
  out[1] = m + r;
}

// Analytic eigenvalues of a 3x3 Hermitian matrix (trigonometric form).
inline void eigenvalues(const Mat<3>& h, double* out) {
  const double q =
      (h.a[0][0].real() + h.a[1][1].real() + h.a[2][2].real()) / 3.0;
  double f2 = 0.0;  // Frobenius norm^2 of h - q I
  for (int i = 0; i < 3; ++i) {
    const double d = h.a[i][i].real() - q;
    f2 += d * d;
  }
  f2 += 2.0 * (std::norm(h.a[0][1]) + std::norm(h.a[0][2]) +
               std::norm(h.a[1][2]));
  const double p = std::sqrt(f2 / 6.0);
  if (p < 1e-300) {
    out[0] = out[1] = out[2] = q;
    return;
  }
  // det((h - qI)/p), real for Hermitian input.
  const auto at = [&](int i, int j) {
    return (h.a[i][j] - (i == j ? cplx(q, 0.0) : cplx(0.0, 0.0))) / p;
  };
  const cplx det = at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
                   at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
                   at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
  const double r = std::clamp(det.real() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e0 = q + 2.0 * p * std::cos(phi);
  const double e2 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double e1 = 3.0 * q - e0 - e2;
  out[0] = std::min({e0, e1, e2});
  out[2] = std::max({e0, e1, e2});
  out[1] = 3.0 * q - out[0] - out[2];
}

template <int NC>
inline double trace_real(const Mat<NC>& h) {
  double t = 0.0;
  for (int i = 0; i < NC; ++i) t += h.a[i][i].real();
  return t;
}

}  // namespace hermitian

class TorusEngine {
 public:
  // Packed Hermitian field layout: slots 0..n-1 hold the (real) diagonal
  // entries; each off-diagonal pair i<j holds (re, im) at consecutive slots.
  static int packed_size(int n) { return n * n; }
  static int off_slot(int n, int i, int j) {
    int idx = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (a == i && b == j) return n + 2 * idx;
        ++idx;
      }
    throw std::logic_error("off_slot: bad indices");
  }

  struct State {
    int n = 0;
    int N = 0;
    std::vector<Eigen::ArrayXd> g;    // packed metric entries
    std::vector<Eigen::ArrayXd> ric;  // packed Ricci entries
    std::vector<Eigen::ArrayXd> lam;  // eigenvalues, ascending
    Eigen::ArrayXd det, logdet;
    std::vector<Eigen::ArrayXd> sigma;       // sigma_k fields, k = 0..n
    std::vector<Eigen::ArrayXd> normalized;  // Sigma_k fields
    Eigen::ArrayXd weights;                  // det / P
    double volume = 0.0;
    double min_metric_eig = 0.0;

    std::int64_t num_nodes() const { return det.size(); }
    bool in_window(std::int64_t) const { return true; }
    double sup_window(const Eigen::ArrayXd& h) const {
      return h.abs().maxCoeff();
    }
    const Eigen::ArrayXd& scalar_curvature() const { return sigma[1]; }
    Spectrum spectrum(std::int64_t p) const {
      std::array<double, max_dim> v{};
      for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = lam[static_cast<std::size_t>(i)][p];
      return Spectrum(
          std::span<const double>(v.data(), static_cast<std::size_t>(n)));
    }
    // |Ric|^2 relative to the metric: sum of squared pencil eigenvalues.
    Eigen::ArrayXd ricci_norm2() const {
      Eigen::ArrayXd out = lam[0].square();
      for (int i = 1; i < n; ++i)
        out += lam[static_cast<std::size_t>(i)].square();
      return out;
    }
    double min_ricci_eig() const { return lam[0].minCoeff(); }
    double min_R() const { return sigma[1].minCoeff(); }
  };

  TorusEngine(int n, int N, std::int64_t node_budget = (std::int64_t{1} << 22))
      : n_(n), N_(N) {
    if (n < 1 || n > 3)
      throw std::domain_error("TorusEngine: complex dimension " +
                              std::to_string(n) + " out of range [1, 3]");
    if (N < 8 || N > 256 || N % 2 != 0)
      throw std::domain_error("TorusEngine: grid size " + std::to_string(N) +
                              " must be even and in [8, 256]");
    double p = 1.0;
    for (int a = 0; a < 2 * n; ++a) p *= N;
    if (p > static_cast<double>(node_budget))
      throw std::domain_error(
          "TorusEngine: grid has " + std::to_string(p) +
          " nodes, over the memory budget of " + std::to_string(node_budget) +
          "; raise the budget explicitly to allow this");
    fft_ = spectral_plans(2 * n, N);
  }

  int complex_dim() const { return n_; }
  int axis_points() const { return N_; }
  std::int64_t num_nodes() const { return fft_->nodes(); }
  static const char* testbed_name() { return "torus"; }

  // The torus has vanishing first Chern class: the cohomological constant
  // is zero for every k.
  double mu(int /*k*/) const { return 0.0; }

  // Complex Hessian of a real field as packed Hermitian entry fields.
  std::vector<Eigen::ArrayXd> complex_hessian(const Eigen::ArrayXd& f) const {
    check_size(f);
    std::vector<std::complex<double>> spec(
        static_cast<std::size_t>(fft_->spec_size()));
    fft_->forward(f.data(), spec.data());
    return hessian_from_spectrum(spec.data());
  }

  TorusEngine rebased(const Eigen::ArrayXd& psi) const {
    TorusEngine e(*this);
    const auto h = complex_hessian(psi);
    if (e.base_.empty()) {
      e.base_ = h;
    } else {
      for (std::size_t s = 0; s < h.size(); ++s) e.base_[s] += h[s];
    }
    return e;
  }

  struct PathCache {
    std::vector<Eigen::ArrayXd> hess;  // complex Hessian of the raw potential
  };
  PathCache make_path_cache(const Eigen::ArrayXd& phi) const {
    return {complex_hessian(phi)};
  }

  State build(const Eigen::ArrayXd& phi) const {
    return assemble(complex_hessian(phi), 1.0);
  }
  State build_scaled(const PathCache& c, double s) const {
    return assemble(c.hess, s);
  }

  // Metric Laplacian g^{i jbar} d_i d_jbar h.
  Eigen::ArrayXd laplacian(const State& st, const Eigen::ArrayXd& h) const {
    check_size(h);
    const auto hess = complex_hessian(h);
    Eigen::ArrayXd out(num_nodes());
    switch (n_) {
      case 1: contract_kernel<1>(st, hess, out); break;
      case 2: contract_kernel<2>(st, hess, out); break;
      default: contract_kernel<3>(st, hess, out); break;
    }
    return out;
  }

  double integrate(const State& st, const Eigen::ArrayXd& h) const {
    check_size(h);
    return (st.weights * h).sum();
  }
  double volume(const State& st) const { return st.volume; }

  // Ricci potential f with Ric = i ddbar f (the class is trivial here),
  // volume-mean zero.
  Eigen::ArrayXd ricci_potential(const State& st) const {
    Eigen::ArrayXd f = -st.logdet;
    f -= integrate(st, f) / st.volume;
    return f;
  }

  // Newton direction for the critical equation from the flat-model
  // linearization of the residual, which is Fourier-diagonal: the symbol is
  // -(pi^2 |m|^2)^2 for k = 0 and -(pi^2 |m|^2)^3 for k = 1 (equally for
  // k = n = 1).  For 2 <= k the flat linearization vanishes identically
  // (sigma_k is at least quadratic in the spectrum there), so no model is
  // available and the caller must fall back to gradient directions.
  bool solve_model_jacobian(const State& /*st*/, int k,
                            const Eigen::ArrayXd& rhs,
                            Eigen::ArrayXd& out) const {
    check_size(rhs);
    if (k < 0 || k > n_)
      throw std::domain_error("solve_model_jacobian: k out of range");
    if (k >= 2) return false;
    const int q = k == 0 ? 2 : 3;
    std::vector<std::complex<double>> spec(
        static_cast<std::size_t>(fft_->spec_size()));
    fft_->forward(rhs.data(), spec.data());
    out.resize(num_nodes());
    fft_->apply_inverse_symbol(spec.data(), q, out.data());
    return out.allFinite();
  }

  // Spectral smoothing used to temper descent directions; strictly
  // positive multipliers, so no mode is ever frozen.
  Eigen::ArrayXd descent_filter(const Eigen::ArrayXd& field, double cutoff,
                                int order) const {
    check_size(field);
    if (!(cutoff > 0.0) || order < 2)
      throw std::domain_error("descent_filter: need cutoff > 0, order >= 2");
    std::vector<std::complex<double>> spec(
        static_cast<std::size_t>(fft_->spec_size()));
    fft_->forward(field.data(), spec.data());
    Eigen::ArrayXd out(num_nodes());
    fft_->apply_lowpass(spec.data(), cutoff, order, out.data());
    return out;
  }

 private:
  void check_size(const Eigen::ArrayXd& f) const {
    if (f.size() != num_nodes())
      throw std::invalid_argument(
          "torus field has " + std::to_string(f.size()) + " entries, grid has " +
          std::to_string(num_nodes()));
  }

  // Entry (i,j) of the complex Hessian in terms of real second partials:
  // 1/4 [ (d_xi d_xj + d_yi d_yj) + i (d_xi d_yj - d_yi d_xj) ].
  std::vector<Eigen::ArrayXd> hessian_from_spectrum(
      const std::complex<double>* spec) const {
    using Term = SpectralDerivatives::DerivTerm;
    std::vector<Eigen::ArrayXd> out(
        static_cast<std::size_t>(packed_size(n_)));
    for (auto& a : out) a.resize(num_nodes());
    for (int i = 0; i < n_; ++i) {
      const int xi = 2 * i, yi = 2 * i + 1;
      fft_->apply_second_derivative(
          spec, {Term{xi, xi, 0.25}, Term{yi, yi, 0.25}},
          out[static_cast<std::size_t>(i)].data());
    }
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
        const int s = off_slot(n_, i, j);
        fft_->apply_second_derivative(
            spec, {Term{xi, xj, 0.25}, Term{yi, yj, 0.25}},
            out[static_cast<std::size_t>(s)].data());
        fft_->apply_second_derivative(
            spec, {Term{xi, yj, 0.25}, Term{yi, xj, -0.25}},
            out[static_cast<std::size_t>(s + 1)].data());
      }
    return out;
  }

  template <int NC>
  void load(const std::vector<Eigen::ArrayXd>& packed, std::int64_t p,
            hermitian::Mat<NC>& m) const {
    for (int i = 0; i < NC; ++i)
      m.a[i][i] = {packed[static_cast<std::size_t>(i)][p], 0.0};
    for (int i = 0; i < NC; ++i)
      for (int j = i + 1; j < NC; ++j) {
        const int s = off_slot(NC, i, j);
        const std::complex<double> v(packed[static_cast<std::size_t>(s)][p],
                                     packed[static_cast<std::size_t>(s + 1)][p]);
        m.a[i][j] = v;
        m.a[j][i] = std::conj(v);
      }
  }

  State assemble(const std::vector<Eigen::ArrayXd>& phi_hess,
                 double scale) const {
    const std::int64_t P = num_nodes();
    State st;
    st.n = n_;
    st.N = N_;

    // Metric entries: identity + background + scale * Hessian(phi).
    st.g.resize(static_cast<std::size_t>(packed_size(n_)));
    for (int s = 0; s < packed_size(n_); ++s) {
      Eigen::ArrayXd e = scale * phi_hess[static_cast<std::size_t>(s)];
      if (!base_.empty()) e += base_[static_cast<std::size_t>(s)];
      if (s < n_) e += 1.0;
      st.g[static_cast<std::size_t>(s)] = std::move(e);
    }

    st.det.resize(P);
    st.logdet.resize(P);
    switch (n_) {
      case 1: det_kernel<1>(st); break;
      case 2: det_kernel<2>(st); break;
      default: det_kernel<3>(st); break;
    }

    // Ricci entries from -log det g.
    std::vector<std::complex<double>> spec(
        static_cast<std::size_t>(fft_->spec_size()));
    Eigen::ArrayXd neg_logdet = -st.logdet;
    fft_->forward(neg_logdet.data(), spec.data());
    st.ric = hessian_from_spectrum(spec.data());

    st.lam.assign(static_cast<std::size_t>(n_), Eigen::ArrayXd(P));
    st.sigma.assign(static_cast<std::size_t>(n_) + 1, Eigen::ArrayXd(P));
    st.normalized.assign(static_cast<std::size_t>(n_) + 1, Eigen::ArrayXd(P));
    switch (n_) {
      case 1: spectrum_kernel<1>(st); break;
      case 2: spectrum_kernel<2>(st); break;
      default: spectrum_kernel<3>(st); break;
    }

    st.weights = st.det / static_cast<double>(P);
    st.volume = st.weights.sum();
    return st;
  }

  template <int NC>
  void det_kernel(State& st) const {
    const std::int64_t P = num_nodes();
    Eigen::ArrayXd mineig(P);
    // Per-node work only; the result is independent of the thread partition.
    parallel_for(0, P, [&](std::int64_t p) {
      hermitian::Mat<NC> g, L;
      load<NC>(st.g, p, g);
      double eigs[NC];
      hermitian::eigenvalues(g, eigs);
      mineig[p] = eigs[0];
      if (hermitian::cholesky(g, L)) {
        double ld = 0.0, d = 1.0;
        for (int i = 0; i < NC; ++i) {
          const double lii = L.a[i][i].real();
          d *= lii * lii;
          ld += std::log(lii);
        }
        st.det[p] = d;
        st.logdet[p] = 2.0 * ld;
      } else {
        st.det[p] = 0.0;
        st.logdet[p] = 0.0;  // never consumed: the witness scan throws first
      }
    });
    std::int64_t worst_node = 0;
    st.min_metric_eig = mineig.minCoeff(&worst_node);
    if (!(st.min_metric_eig > admissibility_floor))
      throw AdmissibilityError(
          "torus potential is not admissible: metric eigenvalue " +
              std::to_string(st.min_metric_eig) + " at node " +
              std::to_string(worst_node),
          static_cast<int>(worst_node), st.min_metric_eig);
  }

  template <int NC>
  void spectrum_kernel(State& st) const {
    const std::int64_t P = num_nodes();
    parallel_for(0, P, [&](std::int64_t p) {
      hermitian::Mat<NC> g, L, R;
      load<NC>(st.g, p, g);
      load<NC>(st.ric, p, R);
      hermitian::cholesky(g, L);
      const hermitian::Mat<NC> B = hermitian::whiten<NC>(L, R);
      double eigs[NC];
      hermitian::eigenvalues(B, eigs);
      std::array<double, max_dim + 1> e{};
      e[0] = 1.0;
      for (int m = 0; m < NC; ++m)
        for (int j = std::min(m + 1, NC); j >= 1; --j)
          e[static_cast<std::size_t>(j)] +=
              eigs[m] * e[static_cast<std::size_t>(j - 1)];
      for (int i = 0; i < NC; ++i)
        st.lam[static_cast<std::size_t>(i)][p] = eigs[i];
      for (int k = 0; k <= NC; ++k) {
        st.sigma[static_cast<std::size_t>(k)][p] =
            e[static_cast<std::size_t>(k)];
        st.normalized[static_cast<std::size_t>(k)][p] =
            e[static_cast<std::size_t>(k)] / binomial(NC, k);
      }
    });
  }

  template <int NC>
  void contract_kernel(const State& st,
                       const std::vector<Eigen::ArrayXd>& hess,
                       Eigen::ArrayXd& out) const {
    parallel_for(0, num_nodes(), [&](std::int64_t p) {
      hermitian::Mat<NC> g, L, H;
      load<NC>(st.g, p, g);
      load<NC>(hess, p, H);
      hermitian::cholesky(g, L);
      out[p] = hermitian::trace_real(hermitian::whiten<NC>(L, H));
    });
  }

  int n_, N_;
  std::shared_ptr<const SpectralDerivatives> fft_;
  std::vector<Eigen::ArrayXd> base_;  // background Hessian (empty = flat)
};

}  // namespace eklab
