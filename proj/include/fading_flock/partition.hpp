#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fading_flock/configuration.hpp"
#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"

namespace fading_flock {

/**
 * A framework (G, p) split into sub-frameworks by a vertex partition. Block
 * diameters, pairwise cluster distances and block adjacency are computed once
 * on construction; the object is immutable afterwards.
 */
class FrameworkPartition {
 public:
  FrameworkPartition(Graph g, Configuration p, VertexPartition vp)
      : graph_(std::move(g)), config_(std::move(p)), vp_(std::move(vp)) {
    check_agents(config_, graph_);
    if (vp_.vertex_count() != graph_.vertex_count()) throw Error("partitions are over different vertex sets");
    const std::size_t m = vp_.block_count();
    diameters_.resize(m);
    for (std::size_t i = 0; i < m; ++i) diameters_[i] = diameter(config_, vp_.block(i));

    distance_.assign(m * m, std::numeric_limits<double>::infinity());
    adjacent_.assign(m * m, 0);
    const std::size_t n = graph_.vertex_count();
    for (Vertex a = 0; a < n; ++a) {
      for (Vertex b = a + 1; b < n; ++b) {
        const std::size_t i = vp_.block_of(a), j = vp_.block_of(b);
        if (i == j) continue;
        const double d = config_.distance(a, b);
        double& slot = distance_[i * m + j];
        slot = std::min(slot, d);
        distance_[j * m + i] = slot;
      }
    }
    for (const auto& [a, b] : graph_.edges()) {
      const std::size_t i = vp_.block_of(a), j = vp_.block_of(b);
      if (i != j) adjacent_[i * m + j] = adjacent_[j * m + i] = 1;
    }
  }

  const Graph& graph() const noexcept { return graph_; }
  const Configuration& configuration() const noexcept { return config_; }
  const VertexPartition& partition() const noexcept { return vp_; }
  std::size_t block_count() const noexcept { return vp_.block_count(); }

  /// phi(p_i).
  double block_diameter(std::size_t i) const {
    check_block(i);
    return diameters_[i];
  }

  InducedSubgraph block_subgraph(std::size_t i) const {
    check_block(i);
    return induced_subgraph(graph_, vp_.block(i));
  }

  Configuration block_configuration(std::size_t i) const {
    check_block(i);
    return config_.subset(vp_.block(i));
  }

  /// Closest pair of agents, one from each block (all pairs, not only edges).
  double cluster_distance(std::size_t i, std::size_t j) const {
    check_pair(i, j);
    return distance_[i * block_count() + j];
  }

  /// Some edge of the graph joins the two blocks.
  bool are_adjacent(std::size_t i, std::size_t j) const {
    check_pair(i, j);
    return adjacent_[i * block_count() + j] != 0;
  }

  /// Largest block diameter.
  double intra_distance() const { return diameters_.empty() ? 0.0 : *std::max_element(diameters_.begin(), diameters_.end()); }

  /// Smallest cluster distance over adjacent block pairs.
  double inter_distance() const {
    double out = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < block_count(); ++i)
      for (std::size_t j = i + 1; j < block_count(); ++j)
        if (are_adjacent(i, j)) {
          any = true;
          out = std::min(out, cluster_distance(i, j));
        }
    if (!any) throw Error("no adjacent pairs");
    return out;
  }

  /// Adjacent blocks i, j are separated as required: d(p_i, p_j) > l and both diameters below it.
  bool separated(std::size_t i, std::size_t j, double l) const {
    const double d = cluster_distance(i, j);
    return d > l && std::max(diameters_[i], diameters_[j]) < d;
  }

  /**
   * Dilute with respect to l: every block induces a connected subgraph, and
   * every adjacent pair of blocks is separated by more than l and by more than
   * either block's diameter.
   */
  bool is_dilute(double l) const {
    for (std::size_t i = 0; i < block_count(); ++i)
      if (!is_connected(induced_subgraph(graph_, vp_.block(i)).graph)) return false;
    for (std::size_t i = 0; i < block_count(); ++i)
      for (std::size_t j = i + 1; j < block_count(); ++j)
        if (are_adjacent(i, j) && !separated(i, j, l)) return false;
    return true;
  }

  friend bool operator==(const FrameworkPartition& a, const FrameworkPartition& b) {
    return a.graph_ == b.graph_ && a.config_ == b.config_ && a.vp_ == b.vp_;
  }

 private:
  void check_block(std::size_t i) const {
    if (i >= block_count())
      throw Error("block " + std::to_string(i) + " out of range [0, " + std::to_string(block_count()) + ")");
  }
  void check_pair(std::size_t i, std::size_t j) const {
    check_block(i);
    check_block(j);
    if (i == j) throw Error("block pair must be two distinct blocks");
  }

  Graph graph_;
  Configuration config_;
  VertexPartition vp_;
  std::vector<double> diameters_;
  std::vector<double> distance_;  // m x m, row-major
  std::vector<char> adjacent_;
};

namespace detail {

/// Union-find whose representative is always the smallest index in the set.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

  std::vector<std::size_t> labels() {
    std::vector<std::size_t> out(parent_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = find(i);
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Partition of the vertices obtained by merging blocks of fp according to block labels.
inline VertexPartition merge_blocks(const FrameworkPartition& fp, std::span<const std::size_t> block_label) {
  std::vector<std::size_t> label(fp.graph().vertex_count());
  for (Vertex v = 0; v < label.size(); ++v) label[v] = block_label[fp.partition().block_of(v)];
  return VertexPartition::from_labels(label);
}

}  // namespace detail

/// Connected components of the graph after dropping every edge longer than l.
inline FrameworkPartition threshold_components(const Graph& g, const Configuration& p, double l) {
  check_agents(p, g);
  detail::DisjointSets sets(g.vertex_count());
  for (const auto& [a, b] : g.edges())
    if (p.distance(a, b) <= l) sets.unite(a, b);
  const auto label = sets.labels();
  return {g, p, VertexPartition::from_labels(label)};
}

/// Merges adjacent blocks whose cluster distance is at most `threshold`, transitively.
inline FrameworkPartition coarsen(const FrameworkPartition& fp, double threshold) {
  detail::DisjointSets sets(fp.block_count());
  for (std::size_t i = 0; i < fp.block_count(); ++i)
    for (std::size_t j = i + 1; j < fp.block_count(); ++j)
      if (fp.are_adjacent(i, j) && fp.cluster_distance(i, j) <= threshold) sets.unite(i, j);
  const auto label = sets.labels();
  return {fp.graph(), fp.configuration(), detail::merge_blocks(fp, label)};
}

struct CoarseningStep {
  double threshold;  // merge threshold that produced this partition (l itself for the first step)
  FrameworkPartition partition;
};

/**
 * The chain sigma > sigma' > sigma'' > ... : threshold components at l, then
 * coarsening with l' = (N-1) l and l^(k+1) = (2 m_k - 1) l^(k), m_k the
 * block count of the partition merged at l^(k). Thresholds that merge nothing are skipped, so every
 * listed step has strictly fewer blocks than the previous one. Ends at the
 * trivial partition (or at the first step if G is disconnected and nothing
 * more can merge).
 */
inline std::vector<CoarseningStep> coarsening_chain(const Graph& g, const Configuration& p, double l) {
  if (!(l > 0.0)) throw Error("threshold must be positive");
  std::vector<CoarseningStep> chain;
  chain.push_back({l, threshold_components(g, p, l)});
  const double n = static_cast<double>(g.vertex_count());
  double threshold = std::max(1.0, n - 1.0) * l;
  // Past the largest pairwise distance every adjacent pair merges; beyond that nothing changes.
  const double ceiling = diameter(p);
  while (!chain.back().partition.partition().is_trivial()) {
    // Merging m blocks of diameter below `threshold` across gaps of at most `threshold`
    // yields diameters of at most (2m - 1) * threshold, the next merge threshold.
    const double m = static_cast<double>(chain.back().partition.block_count());
    auto next = coarsen(chain.back().partition, threshold);
    if (next.block_count() < chain.back().partition.block_count()) {
      chain.push_back({threshold, std::move(next)});
    } else if (threshold > ceiling) {
      break;  // disconnected graph: no adjacent pairs remain
    }
    threshold *= 2.0 * m - 1.0;
  }
  return chain;
}

/**
 * The finest dilute partition: threshold components at l, then repeatedly
 * merge adjacent blocks that are not separated until none remain. Every
 * dilute partition is a coarsening of this one.
 */
inline FrameworkPartition finest_dilute(const Graph& g, const Configuration& p, double l) {
  auto fp = threshold_components(g, p, l);
  while (true) {
    detail::DisjointSets sets(fp.block_count());
    bool merged = false;
    for (std::size_t i = 0; i < fp.block_count(); ++i)
      for (std::size_t j = i + 1; j < fp.block_count(); ++j)
        if (fp.are_adjacent(i, j) && !fp.separated(i, j, l)) merged = sets.unite(i, j) || merged;
    if (!merged) return fp;
    const auto label = sets.labels();
    fp = FrameworkPartition(g, p, detail::merge_blocks(fp, label));
  }
}

/**
 * A nontrivial dilute partition with respect to l, or nullopt when the only
 * dilute partition is the trivial one. Walks the coarsening chain and returns
 * the first nontrivial dilute step; if the chain collapses to the trivial
 * partition first, falls back to finest_dilute, which decides the question.
 */
inline std::optional<FrameworkPartition> find_nontrivial_dilute(const Graph& g, const Configuration& p, double l) {
  if (g.vertex_count() < 2) throw Error("need at least two agents");
  if (!is_connected(g)) throw Error("graph not connected");
  if (!in_configuration_space(p, g)) throw Error("configuration outside P_G");
  for (auto& step : coarsening_chain(g, p, l))
    if (!step.partition.partition().is_trivial() && step.partition.is_dilute(l)) return std::move(step.partition);
  auto finest = finest_dilute(g, p, l);
  if (finest.partition().is_trivial()) return std::nullopt;
  return finest;
}

/// Every dilute partition with respect to l, by brute force over all set partitions (N <= 10).
inline std::vector<FrameworkPartition> enumerate_dilute(const Graph& g, const Configuration& p, double l) {
  check_agents(p, g);
  if (g.vertex_count() > 10) throw Error("instance too large for enumeration");
  std::vector<FrameworkPartition> out;
  for_each_set_partition(g.vertex_count(), [&](std::span<const std::size_t> label) {
    FrameworkPartition fp(g, p, VertexPartition::from_labels(label));
    if (fp.is_dilute(l)) out.push_back(std::move(fp));
  });
  std::sort(out.begin(), out.end(),
            [](const FrameworkPartition& a, const FrameworkPartition& b) { return a.partition() < b.partition(); });
  return out;
}

struct DilutingSubsequence {
  std::vector<std::size_t> indices;
  VertexPartition partition;
  double bound;  // L0: largest intra-cluster distance over the selected snapshots
};

/**
 * Witness for a diluting subsequence: snapshot i is tested against ls[i];
 * successful snapshots are grouped by the vertex partition they induce and the
 * largest group is returned (earliest first index on ties).
 */
inline std::optional<DilutingSubsequence> diluting_subsequence(const Graph& g, std::span<const Configuration> snapshots,
                                                                std::span<const double> ls) {
  if (ls.size() != snapshots.size()) throw Error("need one threshold per snapshot");
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (!(ls[i] > 0.0)) throw Error("thresholds must be positive");
    if (i > 0 && !(ls[i] > ls[i - 1])) throw Error("thresholds must be strictly increasing");
  }
  std::map<VertexPartition, DilutingSubsequence> groups;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    auto found = find_nontrivial_dilute(g, snapshots[i], ls[i]);
    if (!found) continue;
    auto [it, fresh] = groups.try_emplace(found->partition(), DilutingSubsequence{{}, found->partition(), 0.0});
    it->second.indices.push_back(i);
    it->second.bound = std::max(it->second.bound, found->intra_distance());
  }
  const DilutingSubsequence* best = nullptr;
  for (const auto& [vp, group] : groups) {
    if (!best || group.indices.size() > best->indices.size() ||
        (group.indices.size() == best->indices.size() && group.indices.front() < best->indices.front()))
      best = &group;
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace fading_flock
