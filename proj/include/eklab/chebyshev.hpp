#pragma once
// Chebyshev–Gauss collocation on (0,1): interior nodes, barycentric
// differentiation, value<->coefficient transforms, and quadrature weights
// that are exact for polynomials (Fejer first rule).  Used by the radial
// engine, whose profiles live on the compactified coordinate
// x = e^t / (1 + e^t).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace eklab {

struct ChebyshevGrid {
  int M = 0;
  Eigen::ArrayXd x;      // nodes in (0,1), strictly increasing
  Eigen::ArrayXd theta;  // x_j = (1 - cos theta_j)/2
  Eigen::MatrixXd D;     // d/dx collocation matrix (barycentric form)
  Eigen::ArrayXd qx;     // plain dx-integration weights on (0,1)
  Eigen::MatrixXd to_coeff;    // values -> Chebyshev coefficients
  Eigen::MatrixXd from_coeff;  // Chebyshev coefficients -> values
};

inline ChebyshevGrid chebyshev_gauss(int M) {
  if (M < 4 || M > 4096)
    throw std::domain_error("chebyshev_gauss: node count " +
                            std::to_string(M) + " out of range");
  ChebyshevGrid g;
  g.M = M;
  g.x.resize(M);
  g.theta.resize(M);
  const double pi = std::numbers::pi;
  for (int j = 0; j < M; ++j) {
    g.theta[j] = (2.0 * j + 1.0) * pi / (2.0 * M);
    // 1 - cos(theta) evaluated as 2 sin^2(theta/2) keeps the smallest node
    // fully accurate.
    const double s = std::sin(0.5 * g.theta[j]);
    g.x[j] = s * s;
  }

  // Barycentric weights for first-kind Chebyshev points; a global scale is
  // irrelevant because only ratios enter the differentiation matrix.
  Eigen::ArrayXd w(M);
  for (int j = 0; j < M; ++j)
    w[j] = ((j % 2) ? -1.0 : 1.0) * std::sin(g.theta[j]);

  g.D.resize(M, M);
  for (int i = 0; i < M; ++i) {
    double diag = 0.0;
    for (int j = 0; j < M; ++j) {
      if (i == j) continue;
      const double d = (w[j] / w[i]) / (g.x[i] - g.x[j]);
      g.D(i, j) = d;
      diag -= d;
    }
    g.D(i, i) = diag;
  }

  // Discrete cosine pair on the Gauss angles: f_j = sum_m a_m cos(m theta_j),
  // a_m = (2 - delta_{m0})/M * sum_j f_j cos(m theta_j).
  g.to_coeff.resize(M, M);
  g.from_coeff.resize(M, M);
  for (int m = 0; m < M; ++m) {
    const double scale = (m == 0 ? 1.0 : 2.0) / M;
    for (int j = 0; j < M; ++j) {
      const double c = std::cos(m * g.theta[j]);
      g.to_coeff(m, j) = scale * c;
      g.from_coeff(j, m) = c;
    }
  }

  // Integral of the m-th basis polynomial over (0,1): the affine image of
  // T_m has integral 1/(1-m^2) for even m and 0 for odd m.  Contracting with
  // to_coeff gives weights exact for all polynomials of degree < M.
  Eigen::VectorXd basis_int = Eigen::VectorXd::Zero(M);
  for (int m = 0; m < M; m += 2)
    basis_int[m] = 1.0 / (1.0 - static_cast<double>(m) * m);
  g.qx = (g.to_coeff.transpose() * basis_int).array();
  return g;
}

// Interpolate grid values to an arbitrary point in (0,1) (barycentric form;
// exact at the nodes).
inline double barycentric_eval(const ChebyshevGrid& g, const Eigen::ArrayXd& f,
                               double xq) {
  double num = 0.0, den = 0.0;
  for (int j = 0; j < g.M; ++j) {
    const double dx = xq - g.x[j];
    if (std::abs(dx) < 1e-300) return f[j];
    const double wj = ((j % 2) ? -1.0 : 1.0) * std::sin(g.theta[j]) / dx;
    num += wj * f[j];
    den += wj;
  }
  return num / den;
}

}  // namespace eklab
