#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"

namespace fading_flock {

/**
 * N agent positions in R^n, stored column-per-agent (n x N). The column-major
 * layout makes stacked() the vector (x_1, ..., x_N) in R^{nN}.
 */
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::size_t dimension, std::size_t agents) : x_(Eigen::MatrixXd::Zero(dimension, agents)) {
    if (dimension == 0) throw Error("dimension must be at least 1");
  }
  explicit Configuration(Eigen::MatrixXd positions) : x_(std::move(positions)) {
    if (x_.rows() == 0) throw Error("dimension must be at least 1");
  }

  static Configuration from_stacked(std::size_t dimension, const Eigen::VectorXd& stacked) {
    if (dimension == 0 || stacked.size() % static_cast<Eigen::Index>(dimension) != 0)
      throw Error("stacked vector length is not a multiple of the dimension");
    const auto agents = stacked.size() / static_cast<Eigen::Index>(dimension);
    return Configuration(Eigen::Map<const Eigen::MatrixXd>(stacked.data(), static_cast<Eigen::Index>(dimension), agents));
  }

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(x_.rows()); }
  std::size_t agent_count() const noexcept { return static_cast<std::size_t>(x_.cols()); }

  auto point(std::size_t i) { return x_.col(static_cast<Eigen::Index>(i)); }
  auto point(std::size_t i) const { return x_.col(static_cast<Eigen::Index>(i)); }

  const Eigen::MatrixXd& positions() const noexcept { return x_; }
  Eigen::MatrixXd& positions() noexcept { return x_; }

  Eigen::VectorXd stacked() const { return Eigen::Map<const Eigen::VectorXd>(x_.data(), x_.size()); }

  double distance(std::size_t i, std::size_t j) const { return (point(i) - point(j)).norm(); }

  Eigen::VectorXd centroid() const { return x_.rowwise().mean(); }

  /// Copy translated so the centroid is the origin.
  Configuration centered() const {
    Configuration out(*this);
    out.x_.colwise() -= centroid();
    return out;
  }

  /// Sub-configuration (x_{s_0}, x_{s_1}, ...).
  Configuration subset(std::span<const Vertex> vertices) const {
    Eigen::MatrixXd sub(x_.rows(), static_cast<Eigen::Index>(vertices.size()));
    for (std::size_t k = 0; k < vertices.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = point(vertices[k]);
    return Configuration(std::move(sub));
  }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.x_.rows() == b.x_.rows() && a.x_.cols() == b.x_.cols() && a.x_ == b.x_;
  }

 private:
  Eigen::MatrixXd x_;
};

inline void check_agents(const Configuration& p, const Graph& g) {
  if (p.agent_count() != g.vertex_count())
    throw Error("configuration has " + std::to_string(p.agent_count()) + " agents but the graph has " +
                std::to_string(g.vertex_count()) + " vertices");
}

/// Membership in P_G: no two neighbors coincide.
inline bool in_configuration_space(const Configuration& p, const Graph& g) {
  check_agents(p, g);
  return std::none_of(g.edges().begin(), g.edges().end(),
                      [&p](const Edge& e) { return !(p.distance(e.first, e.second) > 0.0); });
}

/// Largest pairwise distance among the listed agents (0 for fewer than two).
inline double diameter(const Configuration& p, std::span<const Vertex> vertices) {
  double out = 0.0;
  for (std::size_t a = 0; a < vertices.size(); ++a)
    for (std::size_t b = a + 1; b < vertices.size(); ++b) out = std::max(out, p.distance(vertices[a], vertices[b]));
  return out;
}

inline double diameter(const Configuration& p) {
  double out = 0.0;
  for (std::size_t a = 0; a < p.agent_count(); ++a)
    for (std::size_t b = a + 1; b < p.agent_count(); ++b) out = std::max(out, p.distance(a, b));
  return out;
}

struct Metrics {
  double d_minus;  // shortest edge
  double d_plus;   // longest edge
  double phi;      // diameter over all pairs
  Eigen::VectorXd centroid;
};

/// Edge-length extremes (edges only), diameter (all pairs) and centroid.
inline Metrics metrics(const Configuration& p, const Graph& g) {
  check_agents(p, g);
  Metrics m{std::numeric_limits<double>::infinity(), 0.0, diameter(p), p.centroid()};
  for (const auto& [a, b] : g.edges()) {
    const double d = p.distance(a, b);
    m.d_minus = std::min(m.d_minus, d);
    m.d_plus = std::max(m.d_plus, d);
  }
  if (g.edge_count() == 0) m.d_minus = 0.0;
  return m;
}

}  // namespace fading_flock
