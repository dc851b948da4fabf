// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written with a different algorithm than
// the code under test: cyclic coordinate descent instead of ADMM, explicit
// entry loops instead of matrix algebra, recurrence-fitting power iteration
// instead of a dense eigensolver.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cyclic coordinate descent for
//   (1/tau)||y - A b||^2 + penalty * sum_l w_l |b_l|,  b_l = 0 off-mask,
// run to a 1e-10 max-coordinate-change tolerance.
inline VectorXd coordinate_descent_lasso(const MatrixXd& a, const VectorXd& y,
                                         double tau, double penalty,
                                         const VectorXd& weights,
                                         const std::vector<uint8_t>& mask,
                                         double tol = 1e-10,
                                         int max_sweeps = 200000) {
  const Eigen::Index q = a.cols();
  VectorXd b = VectorXd::Zero(q);
  VectorXd resid = y;
  const double scale = 2.0 / tau;
  VectorXd col_sq(q);
  for (Eigen::Index l = 0; l < q; ++l) col_sq[l] = a.col(l).squaredNorm();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index l = 0; l < q; ++l) {
      if (!mask.empty() && !mask[l]) continue;
      if (col_sq[l] == 0.0) continue;
      const double c = scale * (a.col(l).dot(resid) + col_sq[l] * b[l]);
      const double thr = penalty * (weights.size() ? weights[l] : 1.0);
      double bn = 0.0;
      if (c > thr)
        bn = (c - thr) / (scale * col_sq[l]);
      else if (c < -thr)
        bn = (c + thr) / (scale * col_sq[l]);
      const double d = b[l] - bn;
      if (d != 0.0) {
        resid += a.col(l) * d;
        b[l] = bn;
        max_change = std::max(max_change, std::abs(d));
      }
    }
    if (max_change < tol) break;
  }
  return b;
}

inline double lasso_objective(const MatrixXd& a, const VectorXd& y, double tau,
                              double penalty, const VectorXd& weights,
                              const VectorXd& b) {
  double pen = 0.0;
  for (Eigen::Index l = 0; l < b.size(); ++l)
    pen += penalty * (weights.size() ? weights[l] : 1.0) * std::abs(b[l]);
  return (y - a * b).squaredNorm() / tau + pen;
}

// Entrywise assembly of B from (gamma, omega, theta) with plain loops.
inline MatrixXd assemble_entrywise(const MatrixXd& gamma, const MatrixXd& omega,
                                   const std::vector<MatrixXd>& theta_row_major,
                                   int p) {
  const int rows = static_cast<int>(gamma.rows());
  const int cols = static_cast<int>(gamma.cols());
  MatrixXd b = MatrixXd::Zero(rows * p, cols * p);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      for (int s = 0; s < p; ++s)
        for (int t = 0; t < p; ++t)
          b(i * p + s, j * p + t) =
              gamma(i, j) * omega(s, t) * theta_row_major[i * cols + j](s, t);
  return b;
}

// Spectral radius by power iteration with a fitted three-term recurrence:
// for large k, A^2 v ~ alpha A v + beta v on the dominant invariant
// subspace, and the dominant modulus is the max root modulus of
// z^2 - alpha z - beta. Handles complex conjugate dominant pairs.
inline double power_spectral_radius(const MatrixXd& a, int max_iter = 50000,
                                    double tol = 1e-12) {
  const Eigen::Index n = a.rows();
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::cos(1.7 * (i + 1.0)) + 0.5;
  v.normalize();
  double prev_estimate = -1.0;
  int stable = 0;
  for (int k = 0; k < max_iter; ++k) {
    const VectorXd av = a * v;
    const double s0 = av.norm();
    if (s0 == 0.0) return 0.0;
    const VectorXd v1 = av / s0;
    const VectorXd av1 = a * v1;
    const double s1 = av1.norm();
    // Least squares for [s0*v1, v] [alpha; beta] ~ s0*s1*v2.
    Eigen::Matrix2d gram;
    Eigen::Vector2d rhs;
    const VectorXd b0 = s0 * v1;
    gram << b0.squaredNorm(), b0.dot(v), b0.dot(v), v.squaredNorm();
    const VectorXd target = s0 * av1;
    rhs << b0.dot(target), v.dot(target);
    const Eigen::Vector2d ab = gram.ldlt().solve(rhs);
    const double alpha = ab[0], beta = ab[1];
    const double disc = alpha * alpha + 4.0 * beta;
    double estimate;
    if (disc >= 0.0) {
      const double r1 = (alpha + std::sqrt(disc)) / 2.0;
      const double r2 = (alpha - std::sqrt(disc)) / 2.0;
      estimate = std::max(std::abs(r1), std::abs(r2));
    } else {
      estimate = std::sqrt(-beta);
    }
    if (std::abs(estimate - prev_estimate) < tol * std::max(1.0, estimate)) {
      if (++stable >= 5) return estimate;
    } else {
      stable = 0;
    }
    prev_estimate = estimate;
    v = s1 > 0.0 ? VectorXd(av1 / s1) : v1;
  }
  return prev_estimate;
}

// Least squares restricted to the masked coordinates (QR on the selected
// columns), zero elsewhere.
inline VectorXd restricted_least_squares(const MatrixXd& a, const VectorXd& y,
                                         const std::vector<uint8_t>& mask) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index l = 0; l < a.cols(); ++l)
    if (mask.empty() || mask[l]) keep.push_back(l);
  MatrixXd sub(a.rows(), keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) sub.col(k) = a.col(keep[k]);
  const VectorXd coef = sub.colPivHouseholderQr().solve(y);
  VectorXd full = VectorXd::Zero(a.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) full[keep[k]] = coef[k];
  return full;
}

}  // namespace oracles
