#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"
#include "fading_flock/interaction.hpp"
#include "fading_flock/numerics.hpp"

namespace fading_flock {

/**
 * Distance no neighboring pair can reach along a trajectory started at
 * potential `psi_initial`: the largest d <= alpha_minus with
 * P_e(d) + (|E| - 1) psi_zero > psi_initial for every edge law P_e,
 * minimized over edges. Each P_e is decreasing on (0, alpha_minus], so the
 * answer per law is the root of P_e(d) = psi_initial - (|E| - 1) psi_zero,
 * taken against a level raised by a small slack so that rounding in psi_initial
 * cannot put an attained distance (the starting one, say) below the bound.
 */
inline double collision_bound(const Graph& g, const InteractionMap& m, double psi_initial) {
  if (m.edge_count() != g.edge_count()) throw Error("interaction map does not match the graph");
  if (g.edge_count() == 0) throw Error("graph has no edges");
  const double psi0 = psi_zero(m);
  const double edges = static_cast<double>(g.edge_count());
  const double floor = edges * psi0;
  if (psi_initial < floor - 1e-12 * std::max(1.0, std::abs(floor))) throw Error("potential below global lower bound");

  const double level = psi_initial - (edges - 1.0) * psi0;
  const double target = level + 1e-12 * std::max(1.0, std::abs(psi_initial) + edges * std::abs(psi0));
  const double top = m.alpha_minus();
  double bound = std::numeric_limits<double>::infinity();
  for (const auto* f : m.distinct_laws()) {
    auto excess = [f, target](double d) { return f->potential(d) - target; };
    if (excess(top) > 0.0) {
      bound = std::min(bound, top);
      continue;
    }
    double hi = top;
    double lo = 0.5 * hi;
    for (int i = 0; excess(lo) <= 0.0; ++i) {
      if (i > 1000) throw Error("collision bound underflow");
      hi = lo;
      lo *= 0.5;
    }
    // Keep the end of the final bracket where the inequality is still strict.
    auto [left, right] = numerics::bracket_root(excess, lo, hi);
    while (left > lo && !(excess(left) > 0.0)) left = std::nextafter(left, 0.0);
    bound = std::min(bound, left);
  }
  return bound;
}

}  // namespace fading_flock
