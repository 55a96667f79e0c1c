#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fading_flock/collision.hpp"
#include "fading_flock/configuration.hpp"
#include "fading_flock/dynamics.hpp"
#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"
#include "fading_flock/interaction.hpp"
#include "fading_flock/partition.hpp"

namespace fading_flock {

struct EquilibriumReport {
  bool is_equilibrium = false;
  double residual = 0.0;  // ||f(p)||
  double d_minus = 0.0;
  double d_plus = 0.0;
  double d_plus_bound = 0.0;  // (N - 1) alpha_plus
  bool bound_satisfied = false;
};

inline constexpr double kEquilibriumBoundTolerance = 1e-6;

/// ||f(p)|| < eps, together with the check d_plus <= (N - 1) alpha_plus that every equilibrium must pass.
inline EquilibriumReport is_equilibrium(const Graph& g, const InteractionMap& m, const Configuration& p, double eps) {
  if (!in_configuration_space(p, g)) throw Error("configuration outside P_G");
  EquilibriumReport r;
  r.residual = vector_field(g, m, p).norm();
  r.is_equilibrium = r.residual < eps;
  const auto met = metrics(p, g);
  r.d_minus = met.d_minus;
  r.d_plus = met.d_plus;
  r.d_plus_bound = (static_cast<double>(g.vertex_count()) - 1.0) * m.alpha_plus();
  r.bound_satisfied = r.d_plus <= r.d_plus_bound + kEquilibriumBoundTolerance;
  return r;
}

/**
 * Pi(k) for k = 1..m: the largest norm of the centroid of a union of k blocks,
 * after translating p so its centroid is the origin. Blocks are weighted by
 * size, so Pi(m) is the global centroid and vanishes.
 */
inline std::vector<double> pi_table(const Configuration& p, const VertexPartition& vp) {
  if (vp.vertex_count() != p.agent_count()) throw Error("partition does not match the configuration");
  const std::size_t m = vp.block_count();
  if (m > 24) throw Error("too many blocks for subset enumeration");
  const Configuration centered = p.centered();
  std::vector<Eigen::VectorXd> sums(m);
  std::vector<double> sizes(m);
  for (std::size_t i = 0; i < m; ++i) {
    sums[i] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dimension()));
    for (Vertex v : vp.block(i)) sums[i] += centered.point(v);
    sizes[i] = static_cast<double>(vp.block(i).size());
  }
  std::vector<double> out(m, 0.0);
  Eigen::VectorXd acc(static_cast<Eigen::Index>(p.dimension()));
  for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << m); ++mask) {
    acc.setZero();
    double weight = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (std::uint32_t{1} << i)) {
        acc += sums[i];
        weight += sizes[i];
      }
    const auto k = static_cast<std::size_t>(std::popcount(mask));
    out[k - 1] = std::max(out[k - 1], acc.norm() / weight);
  }
  return out;
}

inline double pi_hierarchy(const Configuration& p, const VertexPartition& vp, std::size_t k) {
  if (k < 1 || k > vp.block_count())
    throw Error("k = " + std::to_string(k) + " out of range [1, " + std::to_string(vp.block_count()) + "]");
  return pi_table(p, vp)[k - 1];
}

/// Per-snapshot cluster quantities of a trajectory under a fixed vertex partition.
struct ClusterDiagnostics {
  VertexPartition partition;
  std::vector<double> times;
  std::vector<double> intra;            // L_minus(sigma_t)
  std::vector<double> inter;            // L_plus(sigma_t)
  std::vector<std::vector<double>> pi;  // pi[s][k-1] = Pi(k, t_s)
};

inline ClusterDiagnostics cluster_diagnostics(const Trajectory& traj, const VertexPartition& vp) {
  if (vp.is_trivial()) throw Error("self-clustering needs a nontrivial partition");
  ClusterDiagnostics out{vp, {}, {}, {}, {}};
  for (const auto& s : traj.snapshots) {
    FrameworkPartition fp(traj.graph, s.p, vp);
    out.times.push_back(s.t);
    out.intra.push_back(fp.intra_distance());
    out.inter.push_back(fp.inter_distance());
    out.pi.push_back(pi_table(s.p, vp));
  }
  return out;
}

struct SelfClusteringVerdict {
  bool self_clustering = false;
  std::optional<std::size_t> t0_index;  // earliest snapshot from which the condition holds throughout
  std::optional<double> t0;
};

/// Earliest snapshot after which every snapshot has L_minus < l0 and L_plus > l1.
inline SelfClusteringVerdict self_clustering_detect(const Trajectory& traj, const VertexPartition& vp, double l0,
                                                    double l1) {
  if (traj.snapshots.empty()) throw Error("trajectory has no snapshots");
  const auto diag = cluster_diagnostics(traj, vp);
  SelfClusteringVerdict v;
  std::size_t start = diag.times.size();
  while (start > 0 && diag.intra[start - 1] < l0 && diag.inter[start - 1] > l1) --start;
  if (start == diag.times.size()) return v;
  v.self_clustering = true;
  v.t0_index = start;
  v.t0 = diag.times[start];
  return v;
}

struct Lemma4Check {
  std::size_t snapshot = 0;
  double t = 0.0;
  std::size_t k = 0;
  bool applicable = false;
  std::string note;     // why the instant was skipped
  double lhs = 0.0;     // Pi(k+1, t)
  double rhs = 0.0;     // r - N (r - Pi(k, t)) - 2 l0
  double slack = 0.0;   // lhs - rhs
  bool passed = false;
};

inline constexpr double kRunningMaxTolerance = 1e-9;

/**
 * Evaluates Pi(k+1, t) >= r - N (r - Pi(k, t)) - 2 l0 at every snapshot t > 0
 * and k = 1..m-1 where the hypotheses hold on the snapshot grid: r is the
 * running maximum of Pi(1, .), Pi(k, .) is at its running maximum at t, the
 * clusters are tighter than l0, and (when alpha_plus is given) every edge
 * between clusters is longer than alpha_plus.
 */
inline std::vector<Lemma4Check> lemma4_check(const Trajectory& traj, const VertexPartition& vp, double l0,
                                             std::optional<double> alpha_plus = std::nullopt) {
  const auto diag = cluster_diagnostics(traj, vp);
  const std::size_t m = vp.block_count();
  const double n_agents = static_cast<double>(vp.vertex_count());
  std::vector<double> running(m, -std::numeric_limits<double>::infinity());
  std::vector<Lemma4Check> out;
  for (std::size_t s = 0; s < diag.times.size(); ++s) {
    const auto& pi = diag.pi[s];
    for (std::size_t k = 0; k < m; ++k) running[k] = std::max(running[k], pi[k]);

    std::string shared_note;
    if (s == 0) shared_note = "hypotheses not met: t = 0";
    else if (!(diag.intra[s] < l0)) shared_note = "hypotheses not met: clusters not tighter than l0";
    else if (alpha_plus) {
      const auto& p = traj.snapshots[s].p;
      for (const auto& [a, b] : traj.graph.edges())
        if (vp.block_of(a) != vp.block_of(b) && !(p.distance(a, b) > *alpha_plus)) {
          shared_note = "hypotheses not met: inter-cluster edge not attractive";
          break;
        }
    }

    const double r = running[0];
    for (std::size_t k = 1; k < m; ++k) {
      Lemma4Check c;
      c.snapshot = s;
      c.t = diag.times[s];
      c.k = k;
      if (!shared_note.empty()) {
        c.note = shared_note;
      } else if (pi[k - 1] < running[k - 1] - kRunningMaxTolerance) {
        c.note = "hypotheses not met: Pi(k) below its running maximum";
      } else {
        c.applicable = true;
        c.lhs = pi[k];
        c.rhs = r - n_agents * (r - pi[k - 1]) - 2.0 * l0;
        c.slack = c.lhs - c.rhs;
        c.passed = c.slack >= 0.0;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

struct Lemma8Witness {
  double exact;  // |d1 - d2| / sqrt(2)
  Configuration first;
  Configuration second;
};

/**
 * Distance between the sets of configurations whose edge (i, j) has length d1
 * and d2, with a pair attaining it: x_i = -x_j = (d/2, 0, ..., 0) and every
 * other agent at the same place in both.
 */
inline Lemma8Witness lemma8_distance(const Graph& g, Edge edge, double d1, double d2, std::size_t dim) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error("edge lengths must be positive");
  if (dim == 0) throw Error("dimension must be at least 1");
  if (!g.has_edge(edge.first, edge.second)) throw Error("edge is not in the graph");
  const double far = std::max(d1, d2) + 1.0;
  auto build = [&](double d) {
    Configuration p(dim, g.vertex_count());
    double slot = far;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      if (v == edge.first) p.point(v)[0] = d / 2.0;
      else if (v == edge.second) p.point(v)[0] = -d / 2.0;
      else p.point(v)[0] = slot++;
    }
    return p;
  };
  return {std::abs(d1 - d2) / std::sqrt(2.0), build(d1), build(d2)};
}

struct MuEstimate {
  double value = std::numeric_limits<double>::infinity();  // upper estimate of the infimum of ||f||
  Configuration witness;
};

namespace detail {

/// Multistart projected descent on ||f||^2 over a constraint set given by `project`.
template <class Project>
MuEstimate constrained_field_minimum(const Graph& g, const InteractionMap& m, double scale, std::size_t budget,
                                     std::uint64_t seed, std::size_t dim, Project&& project) {
  if (budget < 1) throw Error("sample budget must be at least 1");
  if (dim == 0) throw Error("dimension must be at least 1");
  if (g.edge_count() == 0) throw Error("graph has no edges");
  constexpr int kIterations = 200;
  constexpr double kStep = 1e-2;
  std::mt19937_64 rng(seed);
  const double side = scale * std::pow(static_cast<double>(g.vertex_count()), 1.0 / static_cast<double>(dim));
  std::uniform_real_distribution<double> coord(-side / 2.0, side / 2.0);

  auto objective = [&](const Configuration& p) {
    try {
      return vector_field(g, m, p).squaredNorm();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  MuEstimate best;
  for (std::size_t sample = 0; sample < budget; ++sample) {
    Configuration p(dim, g.vertex_count());
    for (auto& x : p.positions().reshaped()) x = coord(rng);
    std::optional<Configuration> start = project(std::move(p), sample);
    if (!start) continue;
    Configuration cur = std::move(*start);
    double f_cur = objective(cur);
    if (!std::isfinite(f_cur)) continue;

    for (int it = 0; it < kIterations && f_cur > 0.0; ++it) {
      // Central-difference gradient of ||f||^2.
      Eigen::VectorXd y = cur.stacked();
      Eigen::VectorXd grad(y.size());
      const double h = 1e-7 * std::max(1.0, y.cwiseAbs().maxCoeff());
      bool ok = true;
      for (Eigen::Index k = 0; k < y.size() && ok; ++k) {
        const double keep = y[k];
        y[k] = keep + h;
        const double up = objective(Configuration::from_stacked(dim, y));
        y[k] = keep - h;
        const double down = objective(Configuration::from_stacked(dim, y));
        y[k] = keep;
        grad[k] = (up - down) / (2.0 * h);
        ok = std::isfinite(grad[k]);
      }
      if (!ok || grad.norm() == 0.0) break;

      bool improved = false;
      for (double step = kStep; step > 1e-14; step *= 0.5) {
        auto trial = project(Configuration::from_stacked(dim, y - step * grad), sample);
        if (!trial) continue;
        const double f_trial = objective(*trial);
        if (f_trial < f_cur) {
          cur = std::move(*trial);
          f_cur = f_trial;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    const double value = std::sqrt(f_cur);
    if (value < best.value) {
      best.value = value;
      best.witness = cur;
    }
  }
  if (!std::isfinite(best.value)) throw Error("no feasible sample found");
  return best;
}

}  // namespace detail

/**
 * Upper estimate of mu(d), the infimum of ||f(p)|| over configurations with
 * some edge of length exactly d. Each of `budget` random starts pins a random
 * edge to length d (moving its endpoints symmetrically about their midpoint)
 * and is refined by 200 projected descent steps on ||f||^2.
 */
inline MuEstimate mu_estimate(const Graph& g, const InteractionMap& m, double d, std::size_t budget,
                              std::uint64_t seed, std::size_t dim = 2) {
  if (!(d > 0.0)) throw Error("distance must be positive");
  if (g.edge_count() == 0) throw Error("graph has no edges");
  std::vector<std::size_t> pinned(budget);
  std::mt19937_64 edge_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, g.edge_count() - 1);
  for (auto& e : pinned) e = pick(edge_rng);

  auto project = [&](Configuration p, std::size_t sample) -> std::optional<Configuration> {
    const auto [i, j] = g.edges()[pinned[sample]];
    const Eigen::VectorXd mid = 0.5 * (p.point(i) + p.point(j));
    Eigen::VectorXd u = p.point(j) - p.point(i);
    if (u.norm() == 0.0) {
      u.setZero();
      u[0] = 1.0;
    }
    u.normalize();
    p.point(i) = mid - 0.5 * d * u;
    p.point(j) = mid + 0.5 * d * u;
    if (!in_configuration_space(p, g)) return std::nullopt;
    return p;
  };
  return detail::constrained_field_minimum(g, m, 2.0 * std::max(d, m.alpha_plus()), budget, seed, dim, project);
}

struct BlowupReport {
  std::vector<double> distances;
  std::vector<double> estimates;
  bool increasing = false;   // estimates strictly increase as d decreases
  bool applicable = false;   // every d lies in the repulsive range (0, alpha_minus)
  std::string note;
};

/**
 * Estimates of inf ||f(p)|| over configurations whose shortest edge has length
 * d, for each d in `ds` (strictly decreasing). Starts are rescaled about their
 * centroid so the shortest edge is exactly d; descent re-applies the scaling.
 */
inline BlowupReport small_d_blowup_check(const Graph& g, const InteractionMap& m, std::span<const double> ds,
                                         std::size_t budget, std::uint64_t seed, std::size_t dim = 2) {
  BlowupReport r;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!(ds[i] > 0.0)) throw Error("distances must be positive");
    if (i > 0 && !(ds[i] < ds[i - 1])) throw Error("distances must be strictly decreasing");
  }
  r.distances.assign(ds.begin(), ds.end());
  r.applicable = std::all_of(ds.begin(), ds.end(), [&m](double d) { return d < m.alpha_minus(); });
  if (!r.applicable) r.note = "regime not applicable";
  for (double d : ds) {
    auto project = [&g, d](Configuration p, std::size_t) -> std::optional<Configuration> {
      const double shortest = metrics(p, g).d_minus;
      if (!(shortest > 0.0) || !std::isfinite(shortest)) return std::nullopt;
      const Eigen::VectorXd c = p.centroid();
      p.positions() = ((p.positions().colwise() - c) * (d / shortest)).colwise() + c;
      return p;
    };
    r.estimates.push_back(
        detail::constrained_field_minimum(g, m, 2.0 * std::max(d, m.alpha_plus()), budget, seed, dim, project).value);
  }
  r.increasing = true;
  for (std::size_t i = 1; i < r.estimates.size(); ++i)
    if (!(r.estimates[i] > r.estimates[i - 1])) r.increasing = false;
  return r;
}

}  // namespace fading_flock
