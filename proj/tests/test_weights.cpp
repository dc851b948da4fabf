#include <catch2/catch.hpp>

#include <set>

#include "stvar/rng.hpp"
#include "stvar/weights.hpp"

using namespace stvar;

TEST_CASE("distance_weights basics") {
  std::vector<Eigen::Vector2d> pts{{0, 0}, {3, 0}, {0, 4}};
  const WeightMatrix w = distance_weights(pts, 1.0);
  REQUIRE(w.values(0, 0) == 1.0);
  REQUIRE(w.values(1, 1) == 1.0);
  // (1,2) attains d_max = 5
  REQUIRE(w.values(1, 2) == Approx(2.0));
  REQUIRE(w.values(2, 1) == Approx(2.0));
  REQUIRE(w.values(0, 1) == Approx(1.0 + 3.0 / 5.0));
}

TEST_CASE("distance_weights degenerate geometry") {
  REQUIRE(distance_weights({{1.0, 1.0}}, 2.0).values == MatrixXd::Ones(1, 1));
  std::vector<Eigen::Vector2d> same(3, Eigen::Vector2d{0.5, -2.0});
  REQUIRE(distance_weights(same, 2.0).values == MatrixXd::Ones(3, 3));
}

TEST_CASE("distance_weights matches a pairwise-distance oracle") {
  Rng rng(31);
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < 5; ++i) pts.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3)});
  const double c1 = 0.7;
  const WeightMatrix w = distance_weights(pts, c1);
  double d_max = 0.0;
  for (int s = 0; s < 5; ++s)
    for (int t = 0; t < 5; ++t)
      d_max = std::max(d_max, std::hypot(pts[s].x() - pts[t].x(), pts[s].y() - pts[t].y()));
  for (int s = 0; s < 5; ++s)
    for (int t = 0; t < 5; ++t) {
      const double d = std::hypot(pts[s].x() - pts[t].x(), pts[s].y() - pts[t].y());
      REQUIRE(w.values(s, t) == Approx(1.0 + c1 * d / d_max).epsilon(1e-14));
      REQUIRE(w.values(s, t) >= 1.0);
      REQUIRE(w.values(s, t) <= 1.0 + c1 + 1e-12);
      REQUIRE(w.values(s, t) == w.values(t, s));
    }
}

TEST_CASE("jaccard_weights identical neighborhoods give weight 1") {
  // 0 and 1 are both connected to 2 and 3 (and to each other's neighbors only).
  SpatialGraph g(4, {{0, 2}, {2, 0}, {0, 3}, {3, 0}, {1, 2}, {2, 1}, {1, 3}, {3, 1}});
  const WeightMatrix w = jaccard_weights(g, 1.0);
  REQUIRE(w.values(0, 1) == Approx(1.0));
}

TEST_CASE("jaccard_weights direct evaluation") {
  // N(0) = {2,3}, N(1) = {3,4}: intersection 1, union 3.
  SpatialGraph g(5, {{0, 2}, {0, 3}, {1, 3}, {1, 4}});
  const WeightMatrix w = jaccard_weights(g, 1.0);
  REQUIRE(w.values(0, 1) == Approx(1.0 + (1.0 - 1.0 / 3.0)));
}

TEST_CASE("jaccard_weights empty union convention") {
  SpatialGraph g(3, {});  // diagonal only; all neighborhoods empty
  const WeightMatrix w = jaccard_weights(g, 2.0);
  REQUIRE(w.values == MatrixXd::Ones(3, 3));
}

TEST_CASE("jaccard_weights matches a set-arithmetic oracle") {
  Rng rng(17);
  const int p = 8;
  std::vector<std::pair<int, int>> edges;
  for (int s = 0; s < p; ++s)
    for (int t = 0; t < p; ++t)
      if (rng.bernoulli(0.3)) edges.emplace_back(s, t);
  SpatialGraph g(p, edges);
  const double c2 = 0.9;
  const WeightMatrix w = jaccard_weights(g, c2);
  for (int s = 0; s < p; ++s)
    for (int t = 0; t < p; ++t) {
      std::set<int> ns, nt;
      for (int u = 0; u < p; ++u) {
        if (u != s && (g.has(s, u) || g.has(u, s))) ns.insert(u);
        if (u != t && (g.has(t, u) || g.has(u, t))) nt.insert(u);
      }
      std::set<int> uni = ns;
      uni.insert(nt.begin(), nt.end());
      int inter = 0;
      for (int u : ns) inter += nt.count(u);
      const double jac = uni.empty() ? 1.0 : static_cast<double>(inter) / uni.size();
      REQUIRE(w.values(s, t) == Approx(1.0 + c2 * (1.0 - jac)).epsilon(1e-14));
      REQUIRE(w.values(s, t) >= 1.0);
      REQUIRE(w.values(s, t) <= 1.0 + c2 + 1e-12);
    }
}

TEST_CASE("validate_weights") {
  SpatialGraph g(3, {{0, 1}, {1, 0}});
  WeightMatrix ones(MatrixXd::Ones(3, 3));
  REQUIRE(validate_weights(ones, g) == 1.0);

  WeightMatrix bad(MatrixXd::Ones(3, 3));
  bad.values(0, 1) = 0.5;
  REQUIRE_THROWS_WITH(validate_weights(bad, g), Catch::Contains("(1,2)"));

  // Off-graph entries below 1 are fine.
  WeightMatrix off(MatrixXd::Ones(3, 3));
  off.values(0, 2) = 0.0;
  REQUIRE_NOTHROW(validate_weights(off, g));

  std::vector<Eigen::Vector2d> pts{{0, 0}, {1, 0}, {0, 2}};
  SpatialGraph full(3, {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}});
  const WeightMatrix w = distance_weights(pts, 1.0);
  REQUIRE(validate_weights(w, full) == Approx(2.0));
}

TEST_CASE("global weight rescaling is absorbed by the penalty level") {
  Rng rng(4);
  const int p = 4;
  MatrixXd w(p, p), theta(p, p);
  for (int i = 0; i < p * p; ++i) {
    w(i / p, i % p) = rng.uniform(1.0, 2.0);
    theta(i / p, i % p) = rng.uniform(-1.0, 1.0);
  }
  const double mu = 0.37, k = 5.0;
  const double pen1 = mu * (w.cwiseProduct(theta)).cwiseAbs().sum();
  const double pen2 = (mu / k) * ((k * w).cwiseProduct(theta)).cwiseAbs().sum();
  REQUIRE(pen1 == Approx(pen2).epsilon(1e-14));
}
