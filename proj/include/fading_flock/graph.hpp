#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fading_flock/error.hpp"

namespace fading_flock {

using Vertex = std::size_t;

/// Undirected edge stored with `first < second`.
using Edge = std::pair<Vertex, Vertex>;

/**
 * Undirected simple graph on the dense vertex set {0, ..., N-1}.
 *
 * Edges are kept twice: as a sorted pair list (deterministic iteration, and
 * the index used by InteractionMap) and as sorted adjacency lists. The graph
 * is immutable after construction.
 */
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t vertex_count, std::vector<Edge> edges) : n_(vertex_count), adjacency_(vertex_count) {
    for (auto& [a, b] : edges) {
      if (a >= n_ || b >= n_) {
        throw Error("edge (" + std::to_string(a) + ", " + std::to_string(b) + ") references a vertex outside [0, " +
                    std::to_string(n_) + ")");
      }
      if (a == b) throw Error("self-loop at vertex " + std::to_string(a));
      if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) throw Error("duplicate edge");
    edges_ = std::move(edges);
    for (const auto& [a, b] : edges_) {
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());
  }

  static Graph complete(std::size_t n) {
    std::vector<Edge> e;
    for (Vertex i = 0; i < n; ++i)
      for (Vertex j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return {n, std::move(e)};
  }

  static Graph path(std::size_t n) {
    std::vector<Edge> e;
    for (Vertex i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return {n, std::move(e)};
  }

  /// Star with center 0 and leaves 1..n-1.
  static Graph star(std::size_t n) {
    std::vector<Edge> e;
    for (Vertex i = 1; i < n; ++i) e.emplace_back(0, i);
    return {n, std::move(e)};
  }

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::span<const Vertex> adjacent(Vertex v) const {
    check_vertex(v);
    return adjacency_[v];
  }

  bool has_edge(Vertex a, Vertex b) const {
    check_vertex(a);
    check_vertex(b);
    const auto& list = adjacency_[a];
    return std::binary_search(list.begin(), list.end(), b);
  }

  /// Position of edge {a, b} in edges(), or edge_count() if absent.
  std::size_t edge_index(Vertex a, Vertex b) const {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{a, b});
    if (it == edges_.end() || *it != Edge{a, b}) return edges_.size();
    return static_cast<std::size_t>(it - edges_.begin());
  }

  void check_vertex(Vertex v) const {
    if (v >= n_) throw Error("vertex " + std::to_string(v) + " out of range [0, " + std::to_string(n_) + ")");
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Vertex>> adjacency_;
};

inline std::vector<Vertex> neighbors(const Graph& g, Vertex v) {
  auto adj = g.adjacent(v);
  return {adj.begin(), adj.end()};
}

inline bool is_connected(const Graph& g) {
  const std::size_t n = g.vertex_count();
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::vector<Vertex> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    Vertex v = stack.back();
    stack.pop_back();
    for (Vertex w : g.adjacent(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == n;
}

/// Induced subgraph plus the map from its vertices back to the parent graph.
struct InducedSubgraph {
  Graph graph;
  std::vector<Vertex> to_parent;  // to_parent[k] is the parent vertex of local vertex k
};

/// Subgraph induced by `subset`; local vertex k corresponds to subset[k].
inline InducedSubgraph induced_subgraph(const Graph& g, std::span<const Vertex> subset) {
  if (subset.empty()) throw Error("empty vertex set");
  std::vector<std::size_t> local(g.vertex_count(), g.vertex_count());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    g.check_vertex(subset[k]);
    if (local[subset[k]] != g.vertex_count()) throw Error("duplicate vertex " + std::to_string(subset[k]) + " in subset");
    local[subset[k]] = k;
  }
  std::vector<Edge> edges;
  for (const auto& [a, b] : g.edges()) {
    if (local[a] != g.vertex_count() && local[b] != g.vertex_count()) edges.emplace_back(local[a], local[b]);
  }
  return {Graph(subset.size(), std::move(edges)), {subset.begin(), subset.end()}};
}

/**
 * Set partition of {0, ..., N-1}. Blocks are sorted internally and ordered by
 * their smallest member, so two partitions compare equal iff they are the same
 * set partition; the ordering makes the type usable as a map key.
 */
class VertexPartition {
 public:
  VertexPartition() = default;

  VertexPartition(std::size_t vertex_count, std::vector<std::vector<Vertex>> blocks)
      : n_(vertex_count), blocks_(std::move(blocks)), block_of_(vertex_count, vertex_count) {
    for (auto& block : blocks_) {
      if (block.empty()) throw Error("partition contains an empty block");
      std::sort(block.begin(), block.end());
    }
    std::sort(blocks_.begin(), blocks_.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      for (Vertex v : blocks_[i]) {
        if (v >= n_) throw Error("partition vertex " + std::to_string(v) + " out of range");
        if (block_of_[v] != n_) throw Error("partition blocks are not disjoint (vertex " + std::to_string(v) + ")");
        block_of_[v] = i;
      }
    }
    for (Vertex v = 0; v < n_; ++v)
      if (block_of_[v] == n_) throw Error("partition does not cover vertex " + std::to_string(v));
  }

  /// Builds the partition from a block label per vertex (labels need not be contiguous).
  static VertexPartition from_labels(std::span<const std::size_t> label) {
    std::vector<std::vector<Vertex>> blocks;
    std::vector<std::pair<std::size_t, std::size_t>> seen;  // label -> block
    for (Vertex v = 0; v < label.size(); ++v) {
      auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& s) { return s.first == label[v]; });
      if (it == seen.end()) {
        seen.emplace_back(label[v], blocks.size());
        blocks.push_back({v});
      } else {
        blocks[it->second].push_back(v);
      }
    }
    return {label.size(), std::move(blocks)};
  }

  static VertexPartition trivial(std::size_t n) {
    std::vector<Vertex> all(n);
    std::iota(all.begin(), all.end(), Vertex{0});
    return {n, {std::move(all)}};
  }

  static VertexPartition agent_wise(std::size_t n) {
    std::vector<std::vector<Vertex>> blocks;
    for (Vertex v = 0; v < n; ++v) blocks.push_back({v});
    return {n, std::move(blocks)};
  }

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  const std::vector<std::vector<Vertex>>& blocks() const noexcept { return blocks_; }
  const std::vector<Vertex>& block(std::size_t i) const { return blocks_.at(i); }
  std::size_t block_of(Vertex v) const { return block_of_.at(v); }
  bool is_trivial() const noexcept { return blocks_.size() == 1; }

  friend bool operator==(const VertexPartition& a, const VertexPartition& b) {
    return a.n_ == b.n_ && a.blocks_ == b.blocks_;
  }
  friend auto operator<=>(const VertexPartition& a, const VertexPartition& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    return a.blocks_ <=> b.blocks_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<Vertex>> blocks_;
  std::vector<std::size_t> block_of_;
};

/// True iff `a` has strictly fewer blocks than `b` and every block of `b` lies inside a block of `a`.
inline bool is_coarser(const VertexPartition& a, const VertexPartition& b) {
  if (a.vertex_count() != b.vertex_count()) throw Error("partitions are over different vertex sets");
  if (a.block_count() >= b.block_count()) return false;
  for (const auto& block : b.blocks()) {
    const std::size_t target = a.block_of(block.front());
    for (Vertex v : block)
      if (a.block_of(v) != target) return false;
  }
  return true;
}

/// Calls `visit(label)` once per set partition of n elements, as restricted growth strings.
template <class Visitor>
void for_each_set_partition(std::size_t n, Visitor&& visit) {
  if (n == 0) return;
  std::vector<std::size_t> label(n, 0), max_prefix(n, 0);
  while (true) {
    visit(std::span<const std::size_t>(label));
    // Advance to the next restricted growth string.
    std::size_t i = n - 1;
    while (i > 0 && label[i] == max_prefix[i - 1] + 1) --i;
    if (i == 0) return;
    ++label[i];
    max_prefix[i] = std::max(max_prefix[i - 1], label[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      label[j] = 0;
      max_prefix[j] = max_prefix[i];
    }
  }
}

inline std::vector<VertexPartition> all_set_partitions(std::size_t n) {
  std::vector<VertexPartition> out;
  for_each_set_partition(n, [&](std::span<const std::size_t> label) { out.push_back(VertexPartition::from_labels(label)); });
  return out;
}

}  // namespace fading_flock
