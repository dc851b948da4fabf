#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace stvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cross-variable coefficient matrix. Square (m x m) for a lag-1 model;
// a lag-d fit carries d*m predictor columns, so the shape is rows x cols
// with rows = response variables and cols = predictor variables.
struct CrossVariableMatrix {
  MatrixXd values;

  CrossVariableMatrix() = default;
  explicit CrossVariableMatrix(MatrixXd v) : values(std::move(v)) {
    if (!values.allFinite())
      throw std::invalid_argument("CrossVariableMatrix: non-finite entry");
  }

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  Eigen::Index nonzeros() const {
    return (values.array() != 0.0).count();
  }
};

// Set of admissible ordered location pairs with its 0/1 indicator.
// Self-pairs (s,s) are always admissible and are inserted on construction.
struct SpatialGraph {
  int p = 0;
  std::vector<std::pair<int, int>> pairs;      // 0-based, sorted, unique
  std::optional<std::vector<Eigen::Vector2d>> coords;

  SpatialGraph() = default;
  SpatialGraph(int p_, std::vector<std::pair<int, int>> edges,
               std::optional<std::vector<Eigen::Vector2d>> xy = std::nullopt)
      : p(p_), coords(std::move(xy)) {
    if (p <= 0) throw std::invalid_argument("SpatialGraph: p must be positive");
    if (coords && static_cast<int>(coords->size()) != p)
      throw std::invalid_argument("SpatialGraph: coords size != p");
    for (auto [s, t] : edges)
      if (s < 0 || s >= p || t < 0 || t >= p)
        throw std::invalid_argument("SpatialGraph: pair index out of range");
    for (int s = 0; s < p; ++s) edges.emplace_back(s, s);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    pairs = std::move(edges);
  }

  std::size_t pair_count() const { return pairs.size(); }

  bool has(int s, int t) const {
    return std::binary_search(pairs.begin(), pairs.end(), std::make_pair(s, t));
  }

  // 0/1 indicator matrix over location pairs.
  MatrixXd indicator() const {
    MatrixXd omega = MatrixXd::Zero(p, p);
    for (auto [s, t] : pairs) omega(s, t) = 1.0;
    return omega;
  }

  // Neighborhood of v excluding the self-loop, treating pairs as undirected.
  std::vector<int> neighborhood(int v) const {
    std::vector<char> seen(p, 0);
    for (auto [s, t] : pairs) {
      if (s == v && t != v) seen[t] = 1;
      if (t == v && s != v) seen[s] = 1;
    }
    std::vector<int> out;
    for (int u = 0; u < p; ++u)
      if (seen[u]) out.push_back(u);
    return out;
  }
};

// Family of p x p spatial transition blocks, one per (response, predictor)
// variable pair, stored row-major in a flat vector.
struct SpatialBlocks {
  int rows = 0;
  int cols = 0;
  int p = 0;
  std::vector<MatrixXd> blocks;

  SpatialBlocks() = default;
  SpatialBlocks(int rows_, int cols_, int p_)
      : rows(rows_), cols(cols_), p(p_),
        blocks(static_cast<std::size_t>(rows_) * cols_, MatrixXd::Zero(p_, p_)) {
    if (rows <= 0 || cols <= 0 || p <= 0)
      throw std::invalid_argument("SpatialBlocks: dimensions must be positive");
  }

  MatrixXd& block(int i, int j) { return blocks[static_cast<std::size_t>(i) * cols + j]; }
  const MatrixXd& block(int i, int j) const {
    return blocks[static_cast<std::size_t>(i) * cols + j];
  }

  bool all_finite() const {
    for (const auto& b : blocks)
      if (!b.allFinite()) return false;
    return true;
  }
};

// Dense transition matrix tiled into (rows x cols) variable tiles of size p x p.
struct TransitionMatrix {
  MatrixXd values;
  int var_rows = 0;
  int var_cols = 0;
  int p = 0;

  TransitionMatrix() = default;
  TransitionMatrix(MatrixXd v, int var_rows_, int var_cols_, int p_)
      : values(std::move(v)), var_rows(var_rows_), var_cols(var_cols_), p(p_) {
    if (values.rows() != static_cast<Eigen::Index>(var_rows) * p ||
        values.cols() != static_cast<Eigen::Index>(var_cols) * p)
      throw std::invalid_argument("TransitionMatrix: tile grid does not match shape");
  }

  Eigen::Block<const MatrixXd> tile(int i, int j) const {
    return values.block(i * p, j * p, p, p);
  }
  Eigen::Block<MatrixXd> tile(int i, int j) {
    return values.block(i * p, j * p, p, p);
  }
};

// One-lag regression layout: row t of X is the observation preceding row t
// of Y. Columns are variable-major: columns [j*p, (j+1)*p) hold variable j.
// A lag-d design stores d stacked lag blocks, so m_x = d * m_y.
struct StackedData {
  MatrixXd Y;  // T x (m_y * p)
  MatrixXd X;  // T x (m_x * p)
  int T = 0;
  int p = 0;
  int m_y = 0;
  int m_x = 0;
};

}  // namespace stvar
