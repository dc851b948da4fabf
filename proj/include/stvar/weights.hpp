#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stvar/types.hpp"

namespace stvar {

// Entrywise spatial penalty weights. Admissible pairs must satisfy
// 1 <= w <= r_w; validate_weights enforces this against a graph.
struct WeightMatrix {
  MatrixXd values;  // p x p
  double r_w = 1.0;

  WeightMatrix() = default;
  explicit WeightMatrix(MatrixXd v) : values(std::move(v)) {
    r_w = values.size() > 0 ? values.maxCoeff() : 1.0;
  }
};

// w(s,s') = 1 + c1 * d(s,s') / d_max. Degenerate geometry (p = 1 or all
// points coincident) yields the all-ones matrix.
inline WeightMatrix distance_weights(const std::vector<Eigen::Vector2d>& coords,
                                     double c1) {
  if (coords.empty()) throw std::invalid_argument("distance_weights: no coordinates");
  if (c1 < 0.0) throw std::invalid_argument("distance_weights: c1 must be >= 0");
  const int p = static_cast<int>(coords.size());
  MatrixXd dist(p, p);
  double d_max = 0.0;
  for (int s = 0; s < p; ++s)
    for (int t = 0; t < p; ++t) {
      dist(s, t) = (coords[s] - coords[t]).norm();
      d_max = std::max(d_max, dist(s, t));
    }
  if (d_max == 0.0) return WeightMatrix(MatrixXd::Ones(p, p));
  return WeightMatrix(MatrixXd::Ones(p, p) + (c1 / d_max) * dist);
}

// w(s,s') = 1 + c2 * (1 - Jaccard(N(s), N(s'))), neighborhoods excluding
// self-loops. An empty union counts as Jaccard index 1 (weight 1).
inline WeightMatrix jaccard_weights(const SpatialGraph& graph, double c2) {
  if (c2 < 0.0) throw std::invalid_argument("jaccard_weights: c2 must be >= 0");
  const int p = graph.p;
  std::vector<std::vector<int>> nbr(p);
  for (int v = 0; v < p; ++v) nbr[v] = graph.neighborhood(v);
  MatrixXd w(p, p);
  for (int s = 0; s < p; ++s)
    for (int t = 0; t < p; ++t) {
      std::vector<int> inter, uni;
      std::set_intersection(nbr[s].begin(), nbr[s].end(), nbr[t].begin(),
                            nbr[t].end(), std::back_inserter(inter));
      std::set_union(nbr[s].begin(), nbr[s].end(), nbr[t].begin(), nbr[t].end(),
                     std::back_inserter(uni));
      const double jac = uni.empty()
                             ? 1.0
                             : static_cast<double>(inter.size()) / uni.size();
      w(s, t) = 1.0 + c2 * (1.0 - jac);
    }
  return WeightMatrix(std::move(w));
}

// Checks the lower bound on every admissible pair and returns the largest
// admissible weight r_w.
inline double validate_weights(const WeightMatrix& w, const SpatialGraph& graph) {
  if (w.values.rows() != graph.p || w.values.cols() != graph.p)
    throw std::invalid_argument("validate_weights: weight matrix is not p x p");
  double r_w = 1.0;
  for (auto [s, t] : graph.pairs) {
    const double v = w.values(s, t);
    if (!std::isfinite(v) || v < 1.0)
      throw std::invalid_argument("validate_weights: weight at pair (" +
                                  std::to_string(s + 1) + "," + std::to_string(t + 1) +
                                  ") is " + std::to_string(v) + ", must be >= 1");
    r_w = std::max(r_w, v);
  }
  return r_w;
}

}  // namespace stvar
