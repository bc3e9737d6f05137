#pragma once
// FFTW-backed spectral differentiation on uniform periodic grids over the
// unit torus.  Second derivatives are applied as combined multipliers in
// frequency space, so an arbitrary linear combination of second partials
// costs one inverse transform.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eklab {

class SpectralDerivatives {
 public:
  // One term coeff * d^2/dx_u dx_v in a combined derivative.
  struct DerivTerm {
    int u = 0, v = 0;
    double coeff = 1.0;
  };

  SpectralDerivatives(int rank, int N) : rank_(rank), N_(N) {
    if (rank < 1 || rank > 6)
      throw std::domain_error("SpectralDerivatives: rank out of range");
    if (N < 4 || N % 2 != 0)
      throw std::domain_error("SpectralDerivatives: N must be even, >= 4");
    nodes_ = 1;
    for (int a = 0; a < rank; ++a) nodes_ *= N;
    rows_ = nodes_ / N;
    spec_ = rows_ * (N / 2 + 1);

    // Derivative wavenumbers per axis index; the Nyquist line is kept for
    // pure second derivatives (k^2 is even) and zeroed for mixed ones.
    kmix_.resize(static_cast<std::size_t>(N));
    kpure_.resize(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      const int k = j <= N / 2 ? j : j - N;
      kpure_[static_cast<std::size_t>(j)] = static_cast<double>(k);
      kmix_[static_cast<std::size_t>(j)] =
          (j == N / 2) ? 0.0 : static_cast<double>(k);
    }

    // Per-axis wavenumber of each "row" (all axes except the last).
    outer_kmix_.assign(static_cast<std::size_t>(rank - 1), {});
    outer_kpure_.assign(static_cast<std::size_t>(rank - 1), {});
    for (int a = 0; a < rank - 1; ++a) {
      outer_kmix_[static_cast<std::size_t>(a)].resize(
          static_cast<std::size_t>(rows_));
      outer_kpure_[static_cast<std::size_t>(a)].resize(
          static_cast<std::size_t>(rows_));
    }
    for (std::int64_t r = 0; r < rows_; ++r) {
      std::int64_t rem = r;
      for (int a = rank - 2; a >= 0; --a) {
        const int idx = static_cast<int>(rem % N);
        rem /= N;
        outer_kmix_[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] =
            kmix_[static_cast<std::size_t>(idx)];
        outer_kpure_[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] =
            kpure_[static_cast<std::size_t>(idx)];
      }
    }

    std::vector<int> dims(static_cast<std::size_t>(rank), N);
    rbuf_ = fftw_alloc_real(static_cast<std::size_t>(nodes_));
    cbuf_ = fftw_alloc_complex(static_cast<std::size_t>(spec_));
    // FFTW_UNALIGNED removes alignment constraints from the new-array
    // execute interface; callers may hand in any buffer.
    fwd_ = fftw_plan_dft_r2c(rank, dims.data(), rbuf_, cbuf_,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd_ = fftw_plan_dft_c2r(rank, dims.data(), cbuf_, rbuf_,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!fwd_ || !bwd_) throw std::runtime_error("FFTW planning failed");
  }

  ~SpectralDerivatives() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(rbuf_);
    fftw_free(cbuf_);
  }
  SpectralDerivatives(const SpectralDerivatives&) = delete;
  SpectralDerivatives& operator=(const SpectralDerivatives&) = delete;

  int rank() const { return rank_; }
  int axis_points() const { return N_; }
  std::int64_t nodes() const { return nodes_; }
  std::int64_t spec_size() const { return spec_; }

  // Unnormalized forward transform; the input field is preserved.
  void forward(const double* f, std::complex<double>* spec) const {
    fftw_execute_dft_r2c(fwd_, const_cast<double*>(f),
                         reinterpret_cast<fftw_complex*>(spec));
  }

  // out = sum_t coeff_t * d^2 f / dx_u dx_v given the spectrum of f
  // (normalization folded in; `spec` is preserved).
  void apply_second_derivative(const std::complex<double>* spec,
                               const std::vector<DerivTerm>& terms,
                               double* out) const {
    const int L = N_ / 2 + 1;
    std::vector<std::complex<double>> scr(static_cast<std::size_t>(spec_));
    const double pref = -4.0 * std::numbers::pi * std::numbers::pi /
                        static_cast<double>(nodes_);
    for (std::int64_t r = 0; r < rows_; ++r) {
      // Split the multiplier by how many of each term's axes are the
      // (halved) last axis: constant, linear and quadratic pieces.
      double A = 0.0, B = 0.0, C = 0.0;
      for (const DerivTerm& t : terms) {
        const bool ul = t.u == rank_ - 1, vl = t.v == rank_ - 1;
        if (ul && vl) {
          C += t.coeff;
        } else if (ul || vl) {
          const int other = ul ? t.v : t.u;
          B += t.coeff *
               outer_kmix_[static_cast<std::size_t>(other)]
                          [static_cast<std::size_t>(r)];
        } else if (t.u == t.v) {
          const double k =
              outer_kpure_[static_cast<std::size_t>(t.u)]
                          [static_cast<std::size_t>(r)];
          A += t.coeff * k * k;
        } else {
          A += t.coeff *
               outer_kmix_[static_cast<std::size_t>(t.u)]
                          [static_cast<std::size_t>(r)] *
               outer_kmix_[static_cast<std::size_t>(t.v)]
                          [static_cast<std::size_t>(r)];
        }
      }
      const std::int64_t base = r * L;
      for (int j = 0; j < L; ++j) {
        const double kj = kpure_[static_cast<std::size_t>(j)];
        const double kjm = kmix_[static_cast<std::size_t>(j)];
        const double m = pref * (A + B * kjm + C * kj * kj);
        scr[static_cast<std::size_t>(base + j)] =
            m * spec[static_cast<std::size_t>(base + j)];
      }
    }
    fftw_execute_dft_c2r(bwd_,
                         reinterpret_cast<fftw_complex*>(scr.data()), out);
  }

  // Isotropic low-pass 1 / (1 + (|k| / cutoff)^order), normalized round trip.
  void apply_lowpass(const std::complex<double>* spec, double cutoff,
                     int order, double* out) const {
    const int L = N_ / 2 + 1;
    std::vector<std::complex<double>> scr(static_cast<std::size_t>(spec_));
    const double inv_nodes = 1.0 / static_cast<double>(nodes_);
    for (std::int64_t r = 0; r < rows_; ++r) {
      double outer2 = 0.0;
      for (int a = 0; a < rank_ - 1; ++a) {
        const double k = outer_kpure_[static_cast<std::size_t>(a)]
                                     [static_cast<std::size_t>(r)];
        outer2 += k * k;
      }
      const std::int64_t base = r * L;
      for (int j = 0; j < L; ++j) {
        const double kj = kpure_[static_cast<std::size_t>(j)];
        const double ratio2 = (outer2 + kj * kj) / (cutoff * cutoff);
        const double mult =
            inv_nodes / (1.0 + std::pow(ratio2, 0.5 * order));
        scr[static_cast<std::size_t>(base + j)] =
            mult * spec[static_cast<std::size_t>(base + j)];
      }
    }
    fftw_execute_dft_c2r(bwd_,
                         reinterpret_cast<fftw_complex*>(scr.data()), out);
  }

  // Divides each mode by -(pi^2 |m|^2)^q (|m| in integer mode units, the
  // zero mode annihilated) and transforms back; this inverts the constant-
  // coefficient model operator (lap_g/4-based) of order 2q on the unit
  // torus.  Round-trip normalization folded in.
  void apply_inverse_symbol(const std::complex<double>* spec, int q,
                            double* out) const {
    const int L = N_ / 2 + 1;
    std::vector<std::complex<double>> scr(static_cast<std::size_t>(spec_));
    const double inv_nodes = 1.0 / static_cast<double>(nodes_);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (std::int64_t r = 0; r < rows_; ++r) {
      double outer2 = 0.0;
      for (int a = 0; a < rank_ - 1; ++a) {
        const double k = outer_kpure_[static_cast<std::size_t>(a)]
                                     [static_cast<std::size_t>(r)];
        outer2 += k * k;
      }
      const std::int64_t base = r * L;
      for (int j = 0; j < L; ++j) {
        const double kj = kpure_[static_cast<std::size_t>(j)];
        const double m2 = outer2 + kj * kj;
        const double mult =
            m2 > 0.0 ? -inv_nodes / std::pow(pi2 * m2, q) : 0.0;
        scr[static_cast<std::size_t>(base + j)] =
            mult * spec[static_cast<std::size_t>(base + j)];
      }
    }
    fftw_execute_dft_c2r(bwd_,
                         reinterpret_cast<fftw_complex*>(scr.data()), out);
  }

 private:
  int rank_, N_;
  std::int64_t nodes_ = 0, rows_ = 0, spec_ = 0;
  std::vector<double> kmix_, kpure_;
  std::vector<std::vector<double>> outer_kmix_, outer_kpure_;
  fftw_plan fwd_, bwd_;
  double* rbuf_;
  fftw_complex* cbuf_;
};

// Shared plan registry: engines on the same grid reuse one instance.
inline std::shared_ptr<const SpectralDerivatives> spectral_plans(int rank,
                                                                 int N) {
  static std::mutex mu;
  static std::map<std::pair<int, int>,
                  std::shared_ptr<const SpectralDerivatives>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{rank, N}];
  if (!slot) slot = std::make_shared<const SpectralDerivatives>(rank, N);
  return slot;
}

}  // namespace eklab
