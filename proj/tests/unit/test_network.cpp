#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "carelab/errors.hpp"
#include "carelab/network.hpp"
#include "carelab/sim.hpp"

using namespace carelab;

TEST_CASE("add_edge stores both directions once") {
  SocialNetwork g(4);
  CHECK(g.add_edge(2, 0));
  CHECK_FALSE(g.add_edge(0, 2));
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(2, 0));
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(2) == 1);
  CHECK(g.degree(1) == 0);
  CHECK(g.edge_count() == 1);
}

TEST_CASE("self loops are rejected") {
  SocialNetwork g(3);
  CHECK_THROWS_AS(g.add_edge(1, 1), InvalidConfiguration);
  CHECK(g.edge_count() == 0);
}

TEST_CASE("edges and non_edges partition all pairs in lexicographic order") {
  SocialNetwork g(5);
  g.add_edge(3, 1);
  g.add_edge(0, 4);
  g.add_edge(0, 1);
  const auto e = g.edges();
  const std::vector<std::pair<int, int>> expected{{0, 1}, {0, 4}, {1, 3}};
  CHECK(e == expected);
  const auto ne = g.non_edges();
  CHECK(ne.size() + e.size() == 10);
  CHECK(std::is_sorted(ne.begin(), ne.end()));
  for (const auto &[i, j] : ne) {
    CHECK(i < j);
    CHECK_FALSE(g.has_edge(i, j));
  }
}

TEST_CASE("network symmetry holds over random edge insertions") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 15);
    SocialNetwork g(n);
    std::set<std::pair<int, int>> reference;
    const int inserts = static_cast<int>(gen() % 40);
    for (int k = 0; k < inserts; ++k) {
      int a = static_cast<int>(gen() % n), b = static_cast<int>(gen() % n);
      if (a == b) {
        CHECK_THROWS_AS(g.add_edge(a, b), InvalidConfiguration);
        continue;
      }
      const bool fresh = reference.insert({std::min(a, b), std::max(a, b)}).second;
      REQUIRE(g.add_edge(a, b) == fresh);
    }
    REQUIRE(g.well_formed());
    REQUIRE(g.edge_count() == reference.size());
    for (int i = 0; i < n; ++i) {
      int incident = 0;
      for (const auto &[a, b] : reference) incident += (a == i) + (b == i);
      REQUIRE(g.degree(i) == incident);
      REQUIRE_FALSE(g.has_edge(i, i));
      for (int j = 0; j < n; ++j) REQUIRE(g.has_edge(i, j) == g.has_edge(j, i));
    }
  }
}

TEST_CASE("update_network keeps the graph symmetric and only adds edges") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    DynamicsConfig cfg;
    cfg.candidate_pairs_per_week = 25;
    cfg.tie_formation_rate = 0.9;
    auto world = init_world(seed, 3 + static_cast<int>(seed % 20), cfg);
    const auto before = world.network.edges();
    const int added = update_network(world);
    REQUIRE(world.network.well_formed());
    const auto after = world.network.edges();
    REQUIRE(after.size() == before.size() + static_cast<std::size_t>(added));
    REQUIRE(std::includes(after.begin(), after.end(), before.begin(), before.end()));
  }
}

TEST_CASE("update_network on a complete graph draws nothing") {
  DynamicsConfig cfg;
  cfg.init_edge_prob = 1.0;
  auto world = init_world(5, 6, cfg);
  const Rng before = world.rng;
  CHECK(update_network(world) == 0);
  CHECK(world.rng == before);
}
