#include "carelab/network.hpp"

#include <algorithm>

#include "carelab/errors.hpp"

namespace carelab {

bool SocialNetwork::add_edge(int a, int b) {
  if (a == b) throw InvalidConfiguration("self-loop on node " + std::to_string(a));
  auto &na = adjacency_.at(a);
  auto &nb = adjacency_.at(b);
  auto it = std::lower_bound(na.begin(), na.end(), b);
  if (it != na.end() && *it == b) return false;
  na.insert(it, b);
  nb.insert(std::lower_bound(nb.begin(), nb.end(), a), a);
  ++edge_count_;
  return true;
}

bool SocialNetwork::has_edge(int a, int b) const {
  const auto &na = adjacency_.at(a);
  return std::binary_search(na.begin(), na.end(), b);
}

std::vector<std::pair<int, int>> SocialNetwork::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(edge_count_);
  for (int i = 0; i < static_cast<int>(adjacency_.size()); ++i)
    for (int j : adjacency_[i])
      if (j > i) out.emplace_back(i, j);
  return out;
}

std::vector<std::pair<int, int>> SocialNetwork::non_edges() const {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(adjacency_.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!has_edge(i, j)) out.emplace_back(i, j);
  return out;
}

bool SocialNetwork::well_formed() const {
  std::size_t endpoints = 0;
  const int n = static_cast<int>(adjacency_.size());
  for (int i = 0; i < n; ++i) {
    const auto &ni = adjacency_[i];
    if (!std::is_sorted(ni.begin(), ni.end())) return false;
    if (std::adjacent_find(ni.begin(), ni.end()) != ni.end()) return false;
    for (int j : ni) {
      if (j == i || j < 0 || j >= n) return false;
      if (!has_edge(j, i)) return false;
    }
    endpoints += ni.size();
  }
  return endpoints == 2 * edge_count_;
}

}  // namespace carelab
