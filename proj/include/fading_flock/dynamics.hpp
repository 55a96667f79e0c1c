#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fading_flock/collision.hpp"
#include "fading_flock/configuration.hpp"
#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"
#include "fading_flock/interaction.hpp"

namespace fading_flock {

namespace detail {

inline void check_system(const Graph& g, const InteractionMap& m, std::size_t agents) {
  if (agents != g.vertex_count())
    throw Error("configuration has " + std::to_string(agents) + " agents but the graph has " +
                std::to_string(g.vertex_count()) + " vertices");
  if (m.edge_count() != g.edge_count()) throw Error("interaction map does not match the graph");
}

/// out = field of the system restricted to the edges accepted by `keep`.
template <class EdgeFilter>
void accumulate_field(const Graph& g, const InteractionMap& m, const Eigen::Ref<const Eigen::MatrixXd>& x,
                      Eigen::Ref<Eigen::MatrixXd> out, EdgeFilter&& keep) {
  out.setZero();
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    if (!keep(a, b)) continue;
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    const Eigen::VectorXd diff = x.col(ib) - x.col(ia);
    const double d = diff.norm();
    if (!(d > 0.0)) throw Error("configuration outside P_G");
    const double w = m.at(e).g(d);
    out.col(ia) += w * diff;
    out.col(ib) -= w * diff;
  }
}

inline void field_into(const Graph& g, const InteractionMap& m, const Eigen::Ref<const Eigen::MatrixXd>& x,
                       Eigen::Ref<Eigen::MatrixXd> out) {
  accumulate_field(g, m, x, out, [](Vertex, Vertex) { return true; });
}

inline Eigen::VectorXd flatten(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

inline Eigen::VectorXd select_columns(const Eigen::MatrixXd& full, std::span<const Vertex> subset) {
  Eigen::MatrixXd out(full.rows(), static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k) {
    if (subset[k] >= static_cast<std::size_t>(full.cols())) throw Error("vertex " + std::to_string(subset[k]) + " out of range");
    out.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(subset[k]));
  }
  return flatten(out);
}

}  // namespace detail

/// f(p): agent i moves by the sum over neighbors j of g_ij(d_ij) (x_j - x_i). Stacked in R^{nN}.
inline Eigen::VectorXd vector_field(const Graph& g, const InteractionMap& m, const Configuration& p) {
  detail::check_system(g, m, p.agent_count());
  Eigen::MatrixXd out(p.positions().rows(), p.positions().cols());
  detail::field_into(g, m, p.positions(), out);
  return detail::flatten(out);
}

/// Entries of f(p) for `subset`, in subset order. Edges leaving the subset still contribute.
inline Eigen::VectorXd restricted_field(const Graph& g, const InteractionMap& m, const Configuration& p,
                                        std::span<const Vertex> subset) {
  detail::check_system(g, m, p.agent_count());
  Eigen::MatrixXd out(p.positions().rows(), p.positions().cols());
  detail::field_into(g, m, p.positions(), out);
  return detail::select_columns(out, subset);
}

/// Field of the sub-system induced by `subset`: only edges with both ends inside contribute.
inline Eigen::VectorXd subsystem_field(const Graph& g, const InteractionMap& m, const Configuration& p,
                                       std::span<const Vertex> subset) {
  detail::check_system(g, m, p.agent_count());
  if (subset.empty()) throw Error("empty vertex set");
  std::vector<char> inside(g.vertex_count(), 0);
  for (Vertex v : subset) {
    g.check_vertex(v);
    inside[v] = 1;
  }
  Eigen::MatrixXd out(p.positions().rows(), p.positions().cols());
  detail::accumulate_field(g, m, p.positions(), out, [&inside](Vertex a, Vertex b) { return inside[a] && inside[b]; });
  return detail::select_columns(out, subset);
}

/// Psi(p): sum over edges of the pair potential at the edge length.
inline double potential(const Graph& g, const InteractionMap& m, const Configuration& p) {
  detail::check_system(g, m, p.agent_count());
  double psi = 0.0;
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double d = p.distance(edges[e].first, edges[e].second);
    if (!(d > 0.0)) throw Error("configuration outside P_G");
    psi += m.at(e).potential(d);
  }
  return psi;
}

/// Central-difference gradient of Psi with step h (a test oracle for f = -grad Psi).
inline Eigen::VectorXd finite_difference_gradient(const Graph& g, const InteractionMap& m, const Configuration& p,
                                                  double h) {
  if (!(h > 0.0)) throw Error("finite-difference step must be positive");
  const Eigen::VectorXd y = p.stacked();
  Eigen::VectorXd grad(y.size());
  Eigen::VectorXd probe = y;
  try {
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      probe[k] = y[k] + h;
      const double up = potential(g, m, Configuration::from_stacked(p.dimension(), probe));
      probe[k] = y[k] - h;
      const double down = potential(g, m, Configuration::from_stacked(p.dimension(), probe));
      probe[k] = y[k];
      grad[k] = (up - down) / (2.0 * h);
    }
  } catch (const Error&) {
    throw Error("finite-difference perturbation leaves P_G");
  }
  return grad;
}

struct IntegratorParams {
  double relative_tolerance = 1e-9;
  double absolute_tolerance = 1e-12;
  double initial_step = 1e-3;
  double max_step = 100.0;
  double horizon = 1e4;
  double equilibrium_threshold = 1e-9;  // stop once ||f(p)|| drops below this
  double snapshot_interval = 0.0;       // 0 records every accepted step
  double collision_safety = 0.5;        // reject steps with d_minus below safety * collision bound
  double min_step = 1e-14;

  void validate() const {
    if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0)) throw Error("integrator tolerances must be positive");
    if (!(horizon > 0.0)) throw Error("integrator horizon must be positive");
    if (!(initial_step > 0.0) || !(max_step > 0.0)) throw Error("integrator step sizes must be positive");
    if (snapshot_interval < 0.0) throw Error("snapshot interval must be nonnegative");
    if (equilibrium_threshold < 0.0) throw Error("equilibrium threshold must be nonnegative");
  }
};

struct Snapshot {
  double t = 0.0;
  Configuration p;
  double psi = 0.0;
  double f_norm = 0.0;
  double d_minus = 0.0;
  double d_plus = 0.0;
  double phi = 0.0;
};

enum class StopReason { equilibrium, horizon };

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t collision_rejections = 0;
};

/// Time-ordered snapshots of one run plus per-run diagnostics.
struct Trajectory {
  Graph graph;
  std::vector<Snapshot> snapshots;
  IntegratorStats stats;
  StopReason stop = StopReason::horizon;
  double collision_bound = 0.0;
  double min_d_minus = std::numeric_limits<double>::infinity();  // over every accepted step
  double max_f_norm = 0.0;                                       // over every accepted step

  bool converged() const noexcept { return stop == StopReason::equilibrium; }
};

inline Snapshot make_snapshot(const Graph& g, const InteractionMap& m, double t, Configuration p) {
  const auto met = metrics(p, g);
  Snapshot s;
  s.t = t;
  s.psi = potential(g, m, p);
  s.f_norm = vector_field(g, m, p).norm();
  s.d_minus = met.d_minus;
  s.d_plus = met.d_plus;
  s.phi = met.phi;
  s.p = std::move(p);
  return s;
}

/// Raised when the step size underflows; carries the last accepted state.
class StiffnessFailure : public Error {
 public:
  explicit StiffnessFailure(Snapshot last) : Error("stiffness failure"), last_valid(std::move(last)) {}
  Snapshot last_valid;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline double min_edge_length(const Graph& g, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : g.edges())
    out = std::min(out, (x.col(static_cast<Eigen::Index>(a)) - x.col(static_cast<Eigen::Index>(b))).norm());
  return out;
}

}  // namespace detail

/**
 * Integrates dp/dt = f(p) with an embedded Dormand-Prince 5(4) pair and PI
 * step control. A step is also rejected (and halved) when it would bring any
 * edge below collision_safety times the collision bound implied by Psi(p0).
 * Stops at the horizon or once ||f(p)|| < equilibrium_threshold.
 */
inline Trajectory simulate(const Graph& g, const InteractionMap& m, const Configuration& p0,
                           const IntegratorParams& params) {
  using DP = detail::DormandPrince;
  detail::check_system(g, m, p0.agent_count());
  params.validate();
  if (!is_connected(g)) throw Error("graph not connected");
  if (!in_configuration_space(p0, g)) throw Error("initial configuration outside P_G");

  const auto rows = static_cast<Eigen::Index>(p0.dimension());
  const auto cols = static_cast<Eigen::Index>(p0.agent_count());
  const auto size = rows * cols;

  Trajectory traj;
  traj.graph = g;
  traj.collision_bound = collision_bound(g, m, potential(g, m, p0));
  const double guard = params.collision_safety * traj.collision_bound;

  auto field = [&](const Eigen::VectorXd& y, Eigen::VectorXd& out) {
    out.resize(size);
    Eigen::Map<Eigen::MatrixXd> o(out.data(), rows, cols);
    detail::field_into(g, m, Eigen::Map<const Eigen::MatrixXd>(y.data(), rows, cols), o);
  };
  auto as_config = [&](const Eigen::VectorXd& y) { return Configuration::from_stacked(p0.dimension(), y); };

  Eigen::VectorXd y = p0.stacked();
  double t = 0.0;
  Eigen::VectorXd k1, k2, k3, k4, k5, k6, k7, stage(size), y_new(size), err_vec(size);
  field(y, k1);

  traj.snapshots.push_back(make_snapshot(g, m, 0.0, p0));
  traj.min_d_minus = traj.snapshots.back().d_minus;
  traj.max_f_norm = k1.norm();
  if (k1.norm() < params.equilibrium_threshold) {
    traj.stop = StopReason::equilibrium;
    return traj;
  }

  double h = std::min({params.initial_step, params.max_step, params.horizon});
  double next_output = params.snapshot_interval > 0.0 ? params.snapshot_interval : 0.0;
  double err_prev = 1e-4;

  while (true) {
    if (h < params.min_step) throw StiffnessFailure(make_snapshot(g, m, t, as_config(y)));

    double step = h;
    bool hits_horizon = false, hits_output = false;
    if (t + step >= params.horizon) {
      step = params.horizon - t;
      hits_horizon = true;
    }
    if (params.snapshot_interval > 0.0 && t + step >= next_output) {
      hits_horizon = hits_horizon && next_output >= params.horizon;
      step = next_output - t;
      hits_output = true;
    }

    double err = 0.0;
    try {
      stage = y + step * DP::a21 * k1;
      field(stage, k2);
      stage = y + step * (DP::a31 * k1 + DP::a32 * k2);
      field(stage, k3);
      stage = y + step * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3);
      field(stage, k4);
      stage = y + step * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4);
      field(stage, k5);
      stage = y + step * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 + DP::a64 * k4 + DP::a65 * k5);
      field(stage, k6);
      y_new = y + step * (DP::b1 * k1 + DP::b3 * k3 + DP::b4 * k4 + DP::b5 * k5 + DP::b6 * k6);
      field(y_new, k7);
      err_vec = step * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 + DP::e7 * k7);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < size; ++i) {
        const double scale =
            params.absolute_tolerance + params.relative_tolerance * std::max(std::abs(y[i]), std::abs(y_new[i]));
        acc += (err_vec[i] / scale) * (err_vec[i] / scale);
      }
      err = std::sqrt(acc / static_cast<double>(size));
    } catch (const Error&) {
      err = std::numeric_limits<double>::infinity();  // a stage landed on a coincident pair
    }

    if (!std::isfinite(err) || err > 1.0) {
      ++traj.stats.rejected;
      const double shrink = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h = step * shrink;
      continue;
    }
    const double d_minus_new = detail::min_edge_length(g, Eigen::Map<const Eigen::MatrixXd>(y_new.data(), rows, cols));
    if (d_minus_new < guard) {
      ++traj.stats.rejected;
      ++traj.stats.collision_rejections;
      h = 0.5 * step;
      continue;
    }

    // Accept.
    t = hits_horizon ? params.horizon : (hits_output ? next_output : t + step);
    y.swap(y_new);
    k1.swap(k7);
    ++traj.stats.accepted;
    const double f_norm = k1.norm();
    traj.min_d_minus = std::min(traj.min_d_minus, d_minus_new);
    traj.max_f_norm = std::max(traj.max_f_norm, f_norm);

    const bool at_equilibrium = f_norm < params.equilibrium_threshold;
    const bool at_horizon = t >= params.horizon;
    bool record = params.snapshot_interval == 0.0;
    if (hits_output) {
      record = true;
      next_output += params.snapshot_interval;
    }
    if (record || at_equilibrium || at_horizon) traj.snapshots.push_back(make_snapshot(g, m, t, as_config(y)));
    if (at_equilibrium) {
      traj.stop = StopReason::equilibrium;
      break;
    }
    if (at_horizon) {
      traj.stop = StopReason::horizon;
      break;
    }

    const double e = std::max(err, 1e-10);
    const double factor = std::clamp(0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0), 0.2, 5.0);
    const double proposal = step * factor;
    h = std::min(params.max_step, hits_output || hits_horizon ? std::max(h, proposal) : proposal);
    err_prev = e;
  }
  return traj;
}

}  // namespace fading_flock
