#pragma once

// Generators and independent oracles shared by the test binaries. The oracles
// deliberately avoid the library's own helpers (closed forms, enumeration,
// union-find) so agreement means something.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fading_flock/fading_flock.hpp"

namespace testing_support {

using namespace fading_flock;

/// Random spanning tree plus each remaining pair with probability `extra`.
inline Graph random_connected_graph(std::size_t n, std::mt19937_64& rng, double extra = 0.3) {
  std::vector<Edge> edges;
  std::vector<Vertex> order(n);
  for (Vertex v = 0; v < n; ++v) order[v] = v;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    edges.emplace_back(order[pick(rng)], order[k]);
  }
  std::bernoulli_distribution coin(extra);
  for (Vertex a = 0; a < n; ++a)
    for (Vertex b = a + 1; b < n; ++b) {
      const bool present = std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
        return (e.first == a && e.second == b) || (e.first == b && e.second == a);
      });
      if (!present && coin(rng)) edges.emplace_back(a, b);
    }
  return {n, edges};
}

/// Uniform positions in [0, side]^dim with every pair at least `min_sep` apart.
inline Configuration random_configuration(std::size_t dim, std::size_t n, double side, std::mt19937_64& rng,
                                          double min_sep = 0.0) {
  std::uniform_real_distribution<double> u(0.0, side);
  while (true) {
    Configuration p(dim, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < dim; ++k) p.point(i)[static_cast<Eigen::Index>(k)] = u(rng);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = i + 1; j < n && ok; ++j) ok = p.distance(i, j) >= min_sep;
    if (ok) return p;
  }
}

inline Configuration line(std::initializer_list<double> xs) {
  Configuration p(1, xs.size());
  std::size_t i = 0;
  for (double x : xs) p.point(i++)[0] = x;
  return p;
}

inline Configuration planar(std::initializer_list<std::pair<double, double>> xs) {
  Configuration p(2, xs.size());
  std::size_t i = 0;
  for (auto [x, y] : xs) {
    p.point(i)[0] = x;
    p.point(i)[1] = y;
    ++i;
  }
  return p;
}

/// Lennard-Jones law written out directly, independent of InteractionFunction.
inline double lj_g(double d, double s1, double s2, int n1, int n2) {
  return -s1 / std::pow(d, n1) + s2 / std::pow(d, n2);
}

/// Term-by-term field sum for a uniform Lennard-Jones law.
inline Eigen::MatrixXd oracle_field(const Graph& g, const Configuration& p, double s1, double s2, int n1, int n2) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.dimension()), static_cast<Eigen::Index>(p.agent_count()));
  for (Vertex i = 0; i < g.vertex_count(); ++i)
    for (Vertex j : g.adjacent(i)) {
      const Eigen::VectorXd diff = p.point(j) - p.point(i);
      f.col(static_cast<Eigen::Index>(i)) += lj_g(diff.norm(), s1, s2, n1, n2) * diff;
    }
  return f;
}

/// Composite Simpson integral of s g(s) over [a, b] with `n` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return acc * h / 3.0;
}

/// Plain bisection on a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Dense-grid minimum of f over [a, b].
inline double grid_min(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  double best = f(a);
  for (int k = 1; k <= n; ++k) best = std::min(best, f(a + (b - a) * k / n));
  return best;
}

/// All set partitions of {0..n-1} as label vectors, by recursive insertion.
inline std::vector<std::vector<std::size_t>> oracle_set_partitions(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> label(n);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t blocks) {
    if (i == n) {
      out.push_back(label);
      return;
    }
    for (std::size_t b = 0; b <= blocks; ++b) {
      label[i] = b;
      rec(i + 1, std::max(blocks, b + 1));
    }
  };
  if (n > 0) rec(0, 0);
  return out;
}

/// Dilute test straight from vertex labels and positions.
inline bool oracle_is_dilute(const Graph& g, const Configuration& p, const std::vector<std::size_t>& label, double l) {
  const std::size_t n = g.vertex_count();
  const std::size_t m = *std::max_element(label.begin(), label.end()) + 1;
  // Connectivity of each block via repeated relaxation.
  for (std::size_t b = 0; b < m; ++b) {
    std::vector<char> reach(n, 0);
    Vertex seed = n;
    for (Vertex v = 0; v < n; ++v)
      if (label[v] == b) {
        seed = v;
        break;
      }
    reach[seed] = 1;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& [a, c] : g.edges())
        if (label[a] == b && label[c] == b && reach[a] != reach[c]) {
          reach[a] = reach[c] = 1;
          changed = true;
        }
    }
    for (Vertex v = 0; v < n; ++v)
      if (label[v] == b && !reach[v]) return false;
  }
  std::vector<double> diam(m, 0.0);
  for (Vertex a = 0; a < n; ++a)
    for (Vertex c = 0; c < n; ++c)
      if (label[a] == label[c]) diam[label[a]] = std::max(diam[label[a]], p.distance(a, c));
  for (const auto& [a, c] : g.edges()) {
    const std::size_t i = label[a], j = label[c];
    if (i == j) continue;
    double d = INFINITY;
    for (Vertex x = 0; x < n; ++x)
      for (Vertex y = 0; y < n; ++y)
        if (label[x] == i && label[y] == j) d = std::min(d, p.distance(x, y));
    if (!(d > l && std::max(diam[i], diam[j]) < d)) return false;
  }
  return true;
}

/// Does some nontrivial set partition pass the dilute test?
inline bool oracle_has_nontrivial_dilute(const Graph& g, const Configuration& p, double l) {
  for (const auto& label : oracle_set_partitions(g.vertex_count())) {
    if (*std::max_element(label.begin(), label.end()) == 0) continue;
    if (oracle_is_dilute(g, p, label, l)) return true;
  }
  return false;
}

/// Pi(k) by enumerating k-subsets of blocks with a selection mask.
inline double oracle_pi(const Configuration& p, const VertexPartition& vp, std::size_t k) {
  const std::size_t m = vp.block_count();
  const Eigen::VectorXd c = p.positions().rowwise().mean();
  std::vector<char> pick(m, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), 1);
  std::sort(pick.begin(), pick.end());
  double best = 0.0;
  do {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dimension()));
    double count = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (pick[i])
        for (Vertex v : vp.block(i)) {
          sum += p.point(v) - c;
          count += 1;
        }
    best = std::max(best, (sum / count).norm());
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

/// Random partition of n vertices into at most m nonempty blocks.
inline VertexPartition random_partition(std::size_t n, std::size_t max_blocks, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, max_blocks - 1);
  std::vector<std::size_t> label(n);
  for (auto& l : label) l = pick(rng);
  return VertexPartition::from_labels(label);
}

}  // namespace testing_support
