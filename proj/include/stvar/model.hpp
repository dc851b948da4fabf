#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stvar/types.hpp"

namespace stvar {

// B tile (i,j) = gamma_ij * (Omega o Theta_ij). The indicator mask is applied
// here even though solver iterates are already support-constrained, so the
// assembly is safe for arbitrary inputs.
inline TransitionMatrix assemble_transition(const CrossVariableMatrix& gamma,
                                            const SpatialGraph& graph,
                                            const SpatialBlocks& theta) {
  const int rows = static_cast<int>(gamma.rows());
  const int cols = static_cast<int>(gamma.cols());
  if (theta.rows != rows || theta.cols != cols)
    throw std::invalid_argument("assemble_transition: gamma/theta tile grids differ");
  if (theta.p != graph.p)
    throw std::invalid_argument("assemble_transition: graph has wrong location count");
  const int p = graph.p;
  const MatrixXd omega = graph.indicator();
  MatrixXd b = MatrixXd::Zero(static_cast<Eigen::Index>(rows) * p,
                              static_cast<Eigen::Index>(cols) * p);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double g = gamma.values(i, j);
      if (g == 0.0) continue;
      b.block(i * p, j * p, p, p) = g * omega.cwiseProduct(theta.block(i, j));
    }
  return TransitionMatrix(std::move(b), rows, cols, p);
}

namespace detail {

// Sign of the first nonzero entry in row-major scan order; 0 for a zero block.
inline double leading_sign(const MatrixXd& block) {
  for (Eigen::Index r = 0; r < block.rows(); ++r)
    for (Eigen::Index c = 0; c < block.cols(); ++c)
      if (block(r, c) != 0.0) return block(r, c) > 0.0 ? 1.0 : -1.0;
  return 0.0;
}

}  // namespace detail

// Rescale every (gamma_ij, Theta_ij) pair so the block has unit Frobenius
// norm and a positive leading entry, absorbing norm and sign into gamma.
// Pairs with gamma_ij = 0 or Theta_ij = 0 collapse to (0, zero block).
// The products gamma_ij * Theta_ij are preserved exactly up to rounding.
inline std::pair<CrossVariableMatrix, SpatialBlocks> normalize_blocks(
    const CrossVariableMatrix& gamma, const SpatialBlocks& theta) {
  if (theta.rows != gamma.rows() || theta.cols != gamma.cols())
    throw std::invalid_argument("normalize_blocks: tile grids differ");
  CrossVariableMatrix g_out = gamma;
  SpatialBlocks t_out = theta;
  for (int i = 0; i < theta.rows; ++i)
    for (int j = 0; j < theta.cols; ++j) {
      MatrixXd& blk = t_out.block(i, j);
      const double norm = blk.norm();
      const double sign = detail::leading_sign(blk);
      if (gamma.values(i, j) == 0.0 || norm == 0.0) {
        g_out.values(i, j) = 0.0;
        blk.setZero();
        continue;
      }
      blk *= sign / norm;
      g_out.values(i, j) = gamma.values(i, j) * norm * sign;
    }
  return {std::move(g_out), std::move(t_out)};
}

// Build the one-lag regression pair from a series of T+1 observations.
inline StackedData stack_design(const std::vector<VectorXd>& series, int m, int p) {
  if (series.size() < 2)
    throw std::invalid_argument("stack_design: need at least 2 observations");
  const Eigen::Index dim = static_cast<Eigen::Index>(m) * p;
  for (const auto& x : series)
    if (x.size() != dim)
      throw std::invalid_argument("stack_design: observation length != m*p");
  const int T = static_cast<int>(series.size()) - 1;
  StackedData out;
  out.Y.resize(T, dim);
  out.X.resize(T, dim);
  for (int t = 0; t < T; ++t) {
    out.Y.row(t) = series[t + 1].transpose();
    out.X.row(t) = series[t].transpose();
  }
  out.T = T;
  out.p = p;
  out.m_y = m;
  out.m_x = m;
  return out;
}

// Lag-d layout: X row t holds [x_{t+d-1}', x_{t+d-2}', ..., x_t'], so lag
// block l (1-based) occupies predictor variables [(l-1)*m, l*m).
inline StackedData stack_design_lagged(const std::vector<VectorXd>& series, int m,
                                       int p, int d) {
  if (d < 1) throw std::invalid_argument("stack_design_lagged: lag must be >= 1");
  if (static_cast<int>(series.size()) < d + 1)
    throw std::invalid_argument("stack_design_lagged: need at least d+1 observations");
  const Eigen::Index dim = static_cast<Eigen::Index>(m) * p;
  for (const auto& x : series)
    if (x.size() != dim)
      throw std::invalid_argument("stack_design_lagged: observation length != m*p");
  const int T = static_cast<int>(series.size()) - d;
  StackedData out;
  out.Y.resize(T, dim);
  out.X.resize(T, dim * d);
  for (int t = 0; t < T; ++t) {
    out.Y.row(t) = series[t + d].transpose();
    for (int l = 1; l <= d; ++l)
      out.X.row(t).segment((l - 1) * dim, dim) = series[t + d - l].transpose();
  }
  out.T = T;
  out.p = p;
  out.m_y = m;
  out.m_x = m * d;
  return out;
}

// Blocked matrix view of a spatial-block family.
inline MatrixXd blocks_dense(const SpatialBlocks& theta) {
  const int p = theta.p;
  MatrixXd out(static_cast<Eigen::Index>(theta.rows) * p,
               static_cast<Eigen::Index>(theta.cols) * p);
  for (int i = 0; i < theta.rows; ++i)
    for (int j = 0; j < theta.cols; ++j)
      out.block(i * p, j * p, p, p) = theta.block(i, j);
  return out;
}

inline SpatialBlocks blocks_from_dense(const MatrixXd& dense, int rows, int cols, int p) {
  if (dense.rows() != static_cast<Eigen::Index>(rows) * p ||
      dense.cols() != static_cast<Eigen::Index>(cols) * p)
    throw std::invalid_argument("blocks_from_dense: shape does not match tile grid");
  SpatialBlocks theta(rows, cols, p);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) theta.block(i, j) = dense.block(i * p, j * p, p, p);
  return theta;
}

// Companion form of a lag-d system: [[B_1 ... B_d], [I, 0]] acting on the
// stacked state [x_t; x_{t-1}; ...; x_{t-d+1}].
inline TransitionMatrix companion_form(const std::vector<TransitionMatrix>& lags) {
  if (lags.empty())
    throw std::invalid_argument("companion_form: empty lag list");
  const Eigen::Index n = lags.front().values.rows();
  for (const auto& b : lags)
    if (b.values.rows() != n || b.values.cols() != n)
      throw std::invalid_argument("companion_form: lag matrices must be square and equal-sized");
  const int d = static_cast<int>(lags.size());
  const int m = lags.front().var_rows;
  const int p = lags.front().p;
  MatrixXd comp = MatrixXd::Zero(n * d, n * d);
  for (int l = 0; l < d; ++l) comp.block(0, l * n, n, n) = lags[l].values;
  if (d > 1)
    comp.block(n, 0, n * (d - 1), n * (d - 1)) =
        MatrixXd::Identity(n * (d - 1), n * (d - 1));
  return TransitionMatrix(std::move(comp), m * d, m * d, p);
}

}  // namespace stvar
