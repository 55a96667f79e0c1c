#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace fading_flock;
namespace ts = testing_support;

namespace {

InteractionFunction lj43() { return InteractionFunction::lennard_jones(1, 1, 4, 3); }

Trajectory synthetic(const Graph& g, const InteractionMap& m, const std::vector<Configuration>& frames) {
  Trajectory tr{g, {}, {}, StopReason::horizon, 0.0, INFINITY, 0.0};
  for (std::size_t k = 0; k < frames.size(); ++k) tr.snapshots.push_back(make_snapshot(g, m, static_cast<double>(k), frames[k]));
  return tr;
}

Graph two_triangles() { return Graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}}); }

Configuration two_triangles_at(double gap) {
  const double h = std::sqrt(3.0) / 2;
  return ts::planar({{0, 0}, {1, 0}, {0.5, h}, {gap, 0}, {gap + 1, 0}, {gap + 0.5, h}});
}

const VertexPartition kSplit(6, {{0, 1, 2}, {3, 4, 5}});

}  // namespace

TEST(Equilibrium, TwoBodyAtRoot) {
  const Graph one(2, {{0, 1}});
  InteractionMap m(one, lj43());
  const auto r = is_equilibrium(one, m, ts::line({0, 1}), 1e-9);
  EXPECT_TRUE(r.is_equilibrium);
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_EQ(r.d_plus, 1.0);
  EXPECT_DOUBLE_EQ(r.d_plus_bound, m.alpha_plus());
  EXPECT_TRUE(r.bound_satisfied);

  const auto far = is_equilibrium(one, m, ts::line({0, 2 * m.alpha_plus()}), 1e-9);
  EXPECT_FALSE(far.is_equilibrium);
  EXPECT_FALSE(far.bound_satisfied);
  // A loose tolerance can misreport equilibrium; the bound check then flags it.
  const auto loose = is_equilibrium(one, m, ts::line({0, 2 * m.alpha_plus()}), 1.0);
  EXPECT_TRUE(loose.is_equilibrium);
  EXPECT_FALSE(loose.bound_satisfied);

  EXPECT_THROW(is_equilibrium(one, m, ts::line({1, 1}), 1e-9), Error);
}

TEST(Equilibrium, ConvergedK4) {
  const auto k4 = Graph::complete(4);
  InteractionMap m(k4, lj43());
  const auto tr = simulate(k4, m, ts::planar({{0, 0}, {2, 0}, {0, 2.2}, {2.1, 1.9}}), IntegratorParams{});
  ASSERT_TRUE(tr.converged());
  const auto r = is_equilibrium(k4, m, tr.snapshots.back().p, 1e-9);
  EXPECT_TRUE(r.is_equilibrium);
  EXPECT_TRUE(r.bound_satisfied);
  EXPECT_GE(r.d_minus, tr.collision_bound);
}

TEST(Pi, Examples) {
  const auto p = ts::planar({{-3, 0}, {-2, 0}, {1, 1}, {2, 1}, {1, -2}});
  const VertexPartition vp(5, {{0, 1}, {2, 3}, {4}});
  const auto table = pi_table(p, vp);
  ASSERT_EQ(table.size(), 3u);
  EXPECT_LT(table[2], 1e-15);
  // Pi(1) is the largest block-centroid norm about the global centroid.
  const Eigen::VectorXd c = p.centroid();
  double best = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(2);
    for (Vertex v : vp.block(b)) bc += p.point(v);
    best = std::max(best, (bc / static_cast<double>(vp.block(b).size()) - c).norm());
  }
  EXPECT_NEAR(table[0], best, 1e-14);
  for (std::size_t k = 1; k <= 3; ++k) EXPECT_NEAR(pi_hierarchy(p, vp, k), ts::oracle_pi(p, vp, k), 1e-14);
  EXPECT_THROW(pi_hierarchy(p, vp, 0), Error);
  EXPECT_THROW(pi_hierarchy(p, vp, 4), Error);
}

TEST(Pi, MonotoneAndMatchesOracle) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(rng);
    const auto p = ts::random_configuration(2, n, 5.0, rng);
    const auto vp = ts::random_partition(n, std::min<std::size_t>(n, 6), rng);
    const auto table = pi_table(p, vp);
    for (std::size_t k = 0; k < table.size(); ++k) {
      EXPECT_NEAR(table[k], ts::oracle_pi(p, vp, k + 1), 1e-12);
      if (k > 0) EXPECT_LE(table[k], table[k - 1] + 1e-12);
    }
    EXPECT_LT(table.back(), 1e-12);
  }
}

TEST(SelfClustering, StaticDistantClusters) {
  const auto g = two_triangles();
  InteractionMap m(g, lj43());
  const auto tr = synthetic(g, m, std::vector<Configuration>(4, two_triangles_at(20)));
  const auto v = self_clustering_detect(tr, kSplit, 1.5, 10);
  EXPECT_TRUE(v.self_clustering);
  EXPECT_EQ(v.t0_index, 0u);
  EXPECT_EQ(v.t0, 0.0);
}

TEST(SelfClustering, ClustersFormLate) {
  const auto g = two_triangles();
  InteractionMap m(g, lj43());
  const auto tr = synthetic(g, m, {two_triangles_at(3), two_triangles_at(8), two_triangles_at(15), two_triangles_at(20)});
  const auto v = self_clustering_detect(tr, kSplit, 1.5, 10);
  EXPECT_TRUE(v.self_clustering);
  EXPECT_EQ(v.t0_index, 2u);
  EXPECT_EQ(v.t0, 2.0);
}

TEST(SelfClustering, CollapsingTrajectory) {
  const auto g = two_triangles();
  InteractionMap m(g, lj43());
  const auto tr = synthetic(g, m, {two_triangles_at(20), two_triangles_at(12), two_triangles_at(4)});
  const auto v = self_clustering_detect(tr, kSplit, 1.5, 10);
  EXPECT_FALSE(v.self_clustering);
  EXPECT_FALSE(v.t0_index);
  try {
    self_clustering_detect(tr, VertexPartition::trivial(6), 1.5, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "self-clustering needs a nontrivial partition");
  }
}

TEST(Lemma4, StaticConfigurationAgreesWithSubsetEnumeration) {
  const Graph g(6, {{0, 1}, {2, 3}, {4, 5}, {1, 2}, {3, 4}});
  InteractionMap m(g, lj43());
  const auto p = ts::planar({{0, 0}, {0.5, 0}, {10, 0}, {10, 0.5}, {4, 9}, {4.5, 9}});
  const VertexPartition vp(6, {{0, 1}, {2, 3}, {4, 5}});
  const double l0 = 1.0;
  const auto checks = lemma4_check(synthetic(g, m, {p, p}), vp, l0);
  ASSERT_EQ(checks.size(), 4u);
  for (const auto& c : checks) {
    if (c.snapshot == 0) {
      EXPECT_FALSE(c.applicable);
      EXPECT_EQ(c.note.rfind("hypotheses not met", 0), 0u);
      continue;
    }
    ASSERT_TRUE(c.applicable) << c.note;
    const double r = ts::oracle_pi(p, vp, 1);
    const double lhs = ts::oracle_pi(p, vp, c.k + 1);
    const double rhs = r - 6.0 * (r - ts::oracle_pi(p, vp, c.k)) - 2 * l0;
    EXPECT_NEAR(c.lhs, lhs, 1e-12);
    EXPECT_NEAR(c.rhs, rhs, 1e-12);
    EXPECT_EQ(c.passed, lhs >= rhs);
  }
  // k = m - 1: the left side is Pi(m) = 0.
  EXPECT_NEAR(checks.back().lhs, 0.0, 1e-12);
}

TEST(Lemma4, SkipsLooseClustersAndFallingPi) {
  const auto g = two_triangles();
  InteractionMap m(g, lj43());
  const auto tr = synthetic(g, m, {two_triangles_at(30), two_triangles_at(20)});
  const auto checks = lemma4_check(tr, kSplit, 0.5);
  ASSERT_EQ(checks.size(), 2u);
  EXPECT_FALSE(checks[1].applicable);
  EXPECT_EQ(checks[1].note, "hypotheses not met: clusters not tighter than l0");
  const auto falling = lemma4_check(tr, kSplit, 2.0);
  EXPECT_EQ(falling[1].note, "hypotheses not met: Pi(k) below its running maximum");
  const auto attractive = lemma4_check(synthetic(g, m, {two_triangles_at(1.0), two_triangles_at(1.0)}), kSplit, 2.0, m.alpha_plus());
  EXPECT_EQ(attractive[1].note, "hypotheses not met: inter-cluster edge not attractive");
}

TEST(Lemma8, WitnessesAndSampling) {
  const auto g = Graph::complete(4);
  const auto same = lemma8_distance(g, {0, 1}, 2, 2, 2);
  EXPECT_EQ(same.exact, 0.0);
  EXPECT_EQ(same.first, same.second);

  const auto w = lemma8_distance(g, {1, 3}, 1, 3, 2);
  EXPECT_NEAR(w.exact, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(w.first.point(1)[0], 0.5);
  EXPECT_EQ(w.first.point(3)[0], -0.5);
  EXPECT_EQ(w.second.point(1)[0], 1.5);
  EXPECT_EQ(w.second.point(3)[0], -1.5);
  EXPECT_NEAR((w.first.positions() - w.second.positions()).norm(), w.exact, 1e-12);
  EXPECT_NEAR(w.first.distance(1, 3), 1.0, 1e-15);
  EXPECT_TRUE(in_configuration_space(w.first, g));
  EXPECT_TRUE(in_configuration_space(w.second, g));

  EXPECT_THROW(lemma8_distance(Graph::path(3), {0, 2}, 1, 2, 2), Error);
  EXPECT_THROW(lemma8_distance(g, {0, 1}, 0, 2, 2), Error);

  std::mt19937_64 rng(44);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    auto a = ts::random_configuration(3, 4, 4.0, rng);
    auto b = ts::random_configuration(3, 4, 4.0, rng);
    auto pin = [&](Configuration& p, double d) {
      Eigen::VectorXd u(3);
      for (auto& x : u) x = normal(rng);
      u.normalize();
      const Eigen::VectorXd mid = 0.5 * (p.point(1) + p.point(3));
      p.point(1) = mid + 0.5 * d * u;
      p.point(3) = mid - 0.5 * d * u;
    };
    pin(a, 1);
    pin(b, 3);
    EXPECT_GE((a.positions() - b.positions()).norm(), w.exact - 1e-12);
  }
}

TEST(Mu, TwoBodyClosedForm) {
  const Graph one(2, {{0, 1}});
  InteractionMap m(one, lj43());
  for (double d : {0.3, 0.8, 1.7, 4.0}) {
    const auto est = mu_estimate(one, m, d, 3, 7);
    const double oracle = std::sqrt(2.0) * std::abs(d * ts::lj_g(d, 1, 1, 4, 3));
    EXPECT_NEAR(est.value, oracle, 1e-8 * std::max(1.0, oracle)) << "d = " << d;
    EXPECT_NEAR(est.witness.distance(0, 1), d, 1e-12);
  }
  EXPECT_NEAR(mu_estimate(one, m, 1.0, 2, 1).value, 0.0, 1e-12);
  EXPECT_THROW(mu_estimate(one, m, 1.0, 0, 1), Error);
  EXPECT_THROW(mu_estimate(one, m, -1.0, 2, 1), Error);
}

TEST(Mu, PositiveBeyondTheEquilibriumBound) {
  const auto k3 = Graph::complete(3);
  InteractionMap m(k3, lj43());
  const double d = 3.0 * m.alpha_plus();
  const auto est = mu_estimate(k3, m, d, 4, 11);
  EXPECT_GT(est.value, 0.0);
  EXPECT_TRUE(std::isfinite(est.value));
}

TEST(Mu, SeedDeterminesEstimate) {
  const auto k3 = Graph::complete(3);
  InteractionMap m(k3, lj43());
  EXPECT_EQ(mu_estimate(k3, m, 0.7, 3, 5).value, mu_estimate(k3, m, 0.7, 3, 5).value);
}

TEST(Blowup, TwoBodyMatchesClosedForm) {
  const Graph one(2, {{0, 1}});
  InteractionMap m(one, lj43());
  const std::vector<double> ds{0.5, 0.2, 0.05};
  const auto r = small_d_blowup_check(one, m, ds, 2, 3);
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.increasing);
  for (std::size_t i = 0; i < ds.size(); ++i)
    EXPECT_NEAR(r.estimates[i], std::sqrt(2.0) * std::abs(ds[i] * ts::lj_g(ds[i], 1, 1, 4, 3)), 1e-8 * r.estimates[i]);
}

TEST(Blowup, TriangleIncreases) {
  const auto k3 = Graph::complete(3);
  InteractionMap m(k3, lj43());
  const std::vector<double> ds{0.5, 0.1, 0.02};
  const auto r = small_d_blowup_check(k3, m, ds, 4, 9);
  EXPECT_TRUE(r.increasing);
  EXPECT_TRUE(r.note.empty());
}

TEST(Blowup, OutsideRepulsiveRange) {
  const Graph one(2, {{0, 1}});
  InteractionMap m(one, lj43());
  const std::vector<double> ds{3.0, 1.5};
  const auto r = small_d_blowup_check(one, m, ds, 2, 3);
  EXPECT_FALSE(r.applicable);
  EXPECT_EQ(r.note, "regime not applicable");
  EXPECT_THROW(small_d_blowup_check(one, m, std::vector<double>{0.1, 0.2}, 2, 3), Error);
}

TEST(Collision, BoundHoldsAlongTwoClusterRun) {
  const auto g = two_triangles();
  InteractionMap m(g, InteractionFunction::lennard_jones(1, 1, 12, 6));
  IntegratorParams params;
  params.horizon = 200;
  const auto tr = simulate(g, m, two_triangles_at(10), params);
  EXPECT_GT(tr.min_d_minus, tr.collision_bound);
  for (const auto& s : tr.snapshots) EXPECT_GT(s.d_minus, tr.collision_bound);
}
