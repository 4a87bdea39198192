#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace carelab {

/// Undirected simple graph over agent ids [0, n). Neighbour lists are kept
/// sorted so iteration order is a pure function of the edge set.
class SocialNetwork {
 public:
  SocialNetwork() = default;
  explicit SocialNetwork(std::size_t n) : adjacency_(n) {}

  std::size_t size() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  /// Returns false when the edge already exists. Throws on self-loops.
  bool add_edge(int a, int b);
  bool has_edge(int a, int b) const;
  int degree(int id) const { return static_cast<int>(adjacency_.at(id).size()); }
  std::span<const int> neighbors(int id) const { return adjacency_.at(id); }

  /// All edges as (i, j) with i < j, lexicographically ordered.
  std::vector<std::pair<int, int>> edges() const;
  /// All unordered non-adjacent pairs (i < j), lexicographically ordered.
  std::vector<std::pair<int, int>> non_edges() const;

  /// Symmetric, irreflexive, no duplicates, degree == incident edge count.
  bool well_formed() const;

  bool operator==(const SocialNetwork &) const = default;

 private:
  std::vector<std::vector<int>> adjacency_;
  std::size_t edge_count_ = 0;
};

}  // namespace carelab
