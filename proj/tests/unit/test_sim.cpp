#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "carelab/errors.hpp"
#include "carelab/sim.hpp"

using namespace carelab;

namespace {

DynamicsConfig quiet_dynamics() {
  DynamicsConfig d;
  d.interaction_prob = 0.0;
  d.stress_coupling = 0.0;
  d.frailty_drift = 0.0;
  d.frailty_stress_coeff = 0.0;
  d.energy_recovery = 0.0;
  d.init_edge_prob = 0.0;
  return d;
}

bool all_bounded(const World &w) {
  return std::all_of(w.agents.begin(), w.agents.end(), [](const AgentState &a) {
    auto in = [](double v) { return v >= 0.0 && v <= 1.0; };
    return in(a.loneliness) && in(a.frailty) && in(a.stress) && in(a.energy);
  });
}

// Straight-line restatement of one run, written against the documented
// draw order rather than the library's helpers.
struct OracleAgent {
  double l, f, s, e, b;
};

double oracle_final_mean(std::uint64_t seed, int n, int days, const DynamicsConfig &cfg) {
  std::mt19937_64 gen(seed);
  auto u = [&gen] { return static_cast<double>(gen() >> 11) / 9007199254740992.0; };
  auto idx = [&gen](std::uint64_t m) {
    const std::uint64_t lim = UINT64_MAX - UINT64_MAX % m;
    std::uint64_t x = gen();
    while (x >= lim) x = gen();
    return x % m;
  };
  auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };

  std::vector<OracleAgent> ag(n);
  for (auto &a : ag) {
    a.b = 0.5 + 0.4 * u();
    a.l = clamp01(a.b + (-0.1 + 0.2 * u()));
    a.f = 0.5 + 0.4 * u();
    a.s = 0.2 + 0.3 * u();
    a.e = 0.4 + 0.6 * u();
    u();  // age
  }
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  std::vector<int> deg(n, 0);
  const double p0 = 4.0 / (n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u() < p0) adj[i][j] = adj[j][i] = true, ++deg[i], ++deg[j];

  for (int day = 1; day <= days; ++day) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (adj[i][j] && u() < cfg.interaction_prob) {
          ag[i].l -= cfg.beta_l, ag[j].l -= cfg.beta_l;
          ag[i].s -= cfg.beta_l / 2, ag[j].s -= cfg.beta_l / 2;
        }
    for (auto &a : ag) {
      a.l += cfg.alpha_l * (a.b - a.l);
      a.s += cfg.stress_coupling * (a.l - 0.5);
      a.f += cfg.frailty_drift + cfg.frailty_stress_coeff * a.s;
      a.e += cfg.energy_recovery;
      a.l = clamp01(a.l), a.f = clamp01(a.f), a.s = clamp01(a.s), a.e = clamp01(a.e);
    }
    if (day % 7 == 0) {
      std::vector<std::pair<int, int>> cand;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (!adj[i][j]) cand.push_back({i, j});
      if (cand.empty()) continue;
      for (int k = 0; k < cfg.candidate_pairs_per_week; ++k) {
        auto [i, j] = cand[idx(cand.size())];
        const double draw = u();
        if (adj[i][j]) continue;
        const double p = cfg.tie_formation_rate * (1 - std::fabs(ag[i].l - ag[j].l)) *
                         std::exp(-(deg[i] + deg[j]) / (2 * cfg.degree_saturation));
        if (draw < p) adj[i][j] = adj[j][i] = true, ++deg[i], ++deg[j];
      }
    }
  }
  double sum = 0;
  for (const auto &a : ag) sum += a.l;
  return sum / n;
}

}  // namespace

TEST_CASE("init_world draws a bounded population at day 0") {
  const auto w = init_world(300, 30);
  CHECK(w.size() == 30);
  CHECK(w.day == 0);
  CHECK(all_bounded(w));
  CHECK(w.interaction_log.empty());
  for (int i = 0; i < 30; ++i) CHECK(w.agents[i].id == i);
}

TEST_CASE("init_world is deterministic per seed") {
  CHECK(init_world(42, 30) == init_world(42, 30));
  CHECK_FALSE(init_world(42, 30) == init_world(43, 30));
}

TEST_CASE("two agents at density one share exactly one edge") {
  DynamicsConfig d;
  d.init_edge_prob = 1.0;
  const auto w = init_world(42, 2, d);
  CHECK(w.network.edge_count() == 1);
  CHECK(w.network.degree(0) == 1);
  CHECK(w.network.degree(1) == 1);
}

TEST_CASE("init_world rejects populations below two") {
  CHECK_THROWS_AS(init_world(1, 1), InvalidConfiguration);
  CHECK_THROWS_AS(init_world(1, 0), InvalidConfiguration);
}

TEST_CASE("invalid dynamics are rejected") {
  DynamicsConfig d;
  d.interaction_prob = 1.5;
  CHECK_THROWS_AS(init_world(1, 5, d), InvalidConfiguration);
  d = {};
  d.event_period = 0;
  CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
  d = {};
  d.alpha_l = -0.1;
  CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
  d = {};
  d.init_edge_prob = 2.0;
  CHECK_THROWS_AS(d.validate(), InvalidConfiguration);
}

TEST_CASE("agent at its baseline stays put without coupling") {
  auto w = init_world(1, 3, quiet_dynamics());
  w.agents[0].loneliness = w.agents[0].baseline_loneliness;
  const double before = w.agents[0].loneliness;
  step_day(w, std::nullopt);
  CHECK(w.agents[0].loneliness == before);
}

TEST_CASE("reversion moves an isolated agent 5% of the gap") {
  auto w = init_world(1, 3, quiet_dynamics());
  auto &a = w.agents[1];
  a.loneliness = 0.4;
  a.baseline_loneliness = 0.8;
  step_day(w, std::nullopt);
  CHECK(w.agents[1].loneliness == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("edge activation lowers loneliness and stress of both endpoints") {
  DynamicsConfig d = quiet_dynamics();
  d.interaction_prob = 1.0;
  d.alpha_l = 0.0;
  d.beta_l = 0.01;
  auto w = init_world(3, 3, d);
  w.network.add_edge(0, 2);
  for (auto &a : w.agents) a.loneliness = 0.5, a.stress = 0.5;
  step_day(w, std::nullopt);
  CHECK(w.agents[0].loneliness == doctest::Approx(0.49));
  CHECK(w.agents[2].loneliness == doctest::Approx(0.49));
  CHECK(w.agents[1].loneliness == doctest::Approx(0.5));
  CHECK(w.agents[0].stress == doctest::Approx(0.495));
  CHECK(w.interaction_history(0) == std::vector<int>{1});
  CHECK(w.interaction_history(1) == std::vector<int>{0});
}

TEST_CASE("interaction log keeps min(day, 7) days") {
  auto w = init_world(9, 10);
  for (int day = 1; day <= 20; ++day) {
    step_day(w, PolicyParams{});
    REQUIRE(w.interaction_log.size() == static_cast<std::size_t>(std::min(day, 7)));
    REQUIRE(w.interaction_history(4).size() == static_cast<std::size_t>(std::min(day, 7)));
  }
}

TEST_CASE("social event with intensity 1 lowers a participant by event_effect") {
  DynamicsConfig d = quiet_dynamics();
  d.event_effect = 0.03;
  auto w = init_world(1, 3, d);
  for (auto &a : w.agents) a.loneliness = 0.5, a.energy = 0.9;
  w.agents[2].energy = 0.1;
  CHECK(apply_social_event(w, 1.0) == 2);
  CHECK(w.agents[0].loneliness == doctest::Approx(0.47).epsilon(1e-12));
  CHECK(w.agents[2].loneliness == 0.5);
  CHECK(w.agents[0].energy == doctest::Approx(0.85));
}

TEST_CASE("event with nobody above the energy gate changes nothing") {
  auto w = init_world(1, 5);
  for (auto &a : w.agents) a.energy = w.dynamics.event_energy_gate;
  const auto before = w.agents;
  CHECK(apply_social_event(w, 1.5) == 0);
  CHECK(w.agents == before);
}

TEST_CASE("event reduction is proportional to intensity") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 1000; ++trial) {
    auto w1 = init_world(gen(), 8);
    for (auto &a : w1.agents) a.loneliness = 0.9, a.energy = 0.8;
    auto w2 = w1;
    apply_social_event(w1, 1.5);
    apply_social_event(w2, 0.8);
    for (std::size_t i = 0; i < w1.size(); ++i) {
      const double r1 = 0.9 - w1.agents[i].loneliness;
      const double r2 = 0.9 - w2.agents[i].loneliness;
      REQUIRE(r1 / r2 == doctest::Approx(1.5 / 0.8).epsilon(1e-9));
    }
  }
}

TEST_CASE("no eligible agents means no visits and no draws") {
  auto w = init_world(1, 6);
  for (auto &a : w.agents) a.loneliness = 0.5;
  const Rng before = w.rng;
  CHECK(apply_home_visits(w, 0.6, 0.5) == 0);
  CHECK(w.visits_attempted_today == 0);
  CHECK(w.rng == before);
}

TEST_CASE("forced visit takes 0.65 down to 0.60") {
  DynamicsConfig d;
  d.visit_loneliness_effect = 0.05;
  d.visit_stress_effect = 0.03;
  auto w = init_world(1, 2, d);
  w.agents[0].loneliness = 0.65;
  w.agents[0].stress = 0.3;
  w.agents[1].loneliness = 0.6;
  CHECK(apply_home_visits(w, 0.6, 0.3, [] { return 0.0; }) == 1);
  CHECK(w.agents[0].loneliness == doctest::Approx(0.60).epsilon(1e-12));
  CHECK(w.agents[0].stress == doctest::Approx(0.27).epsilon(1e-12));
  CHECK(w.agents[1].loneliness == 0.6);  // not strictly above the threshold
  CHECK(w.total_visits == 1);
}

TEST_CASE("visit success rate at the lower probability bound is 0.15 within 3 sigma") {
  auto w = init_world(77, 100);
  long successes = 0, trials = 0;
  while (trials < 10000) {
    for (auto &a : w.agents) a.loneliness = 0.9;
    successes += apply_home_visits(w, 0.4, 0.15);
    trials += 100;
  }
  const double rate = static_cast<double>(successes) / trials;
  const double sigma = std::sqrt(0.15 * 0.85 / trials);
  CHECK(std::fabs(rate - 0.15) < 3 * sigma);
}

TEST_CASE("lowering the threshold never shrinks the eligible set") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> th(0.4, 0.6);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto w = init_world(gen(), 20);
    double hi = th(gen), lo = th(gen);
    if (lo > hi) std::swap(lo, hi);
    std::vector<int> at_hi, at_lo;
    auto count = [&w](double t, std::vector<int> &out) {
      auto copy = w;
      apply_home_visits(copy, t, 0.5, [] { return 1.0; });
      for (const auto &a : w.agents)
        if (a.loneliness > t) out.push_back(a.id);
      return copy.visits_attempted_today;
    };
    const int n_hi = count(hi, at_hi);
    const int n_lo = count(lo, at_lo);
    REQUIRE(n_lo >= n_hi);
    REQUIRE(std::includes(at_lo.begin(), at_lo.end(), at_hi.begin(), at_hi.end()));
  }
}

TEST_CASE("tie probability hand values") {
  DynamicsConfig d;
  CHECK(tie_probability(d, 0.0, 1.0, 0, 0) == 0.0);
  CHECK(tie_probability(d, 0.5, 0.5, 0, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(tie_probability(d, 0.5, 0.7, 3, 3) == doctest::Approx(0.2 * 0.8 * std::exp(-0.5)));
}

TEST_CASE("tie formation frequency matches its probability within 3 sigma") {
  DynamicsConfig d;
  d.init_edge_prob = 0.0;
  d.candidate_pairs_per_week = 1;
  const double p = tie_probability(d, 0.5, 0.5, 0, 0);
  int formed = 0;
  const int trials = 10000;
  auto base = init_world(123, 2, d);
  base.agents[0].loneliness = base.agents[1].loneliness = 0.5;
  for (int k = 0; k < trials; ++k) {
    World w = base;
    w.rng = Rng(1000 + k);
    formed += update_network(w);
  }
  const double rate = static_cast<double>(formed) / trials;
  CHECK(std::fabs(rate - p) < 3 * std::sqrt(p * (1 - p) / trials));
}

TEST_CASE("mean loneliness") {
  auto w = init_world(1, 3);
  for (auto &a : w.agents) a.loneliness = 0.5;
  CHECK(mean_loneliness(w) == 0.5);
  w.agents[0].loneliness = 0.2, w.agents[1].loneliness = 0.4, w.agents[2].loneliness = 0.6;
  CHECK(mean_loneliness(w) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("mean loneliness matches reordered summation") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto w = init_world(gen(), 2 + static_cast<int>(gen() % 60));
    double sum = 0;
    for (auto it = w.agents.rbegin(); it != w.agents.rend(); ++it) sum += it->loneliness;
    REQUIRE(std::fabs(mean_loneliness(w) - sum / w.size()) < 1e-12);
  }
}

TEST_CASE("states stay bounded under random configs and policies") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    DynamicsConfig d;
    d.alpha_l = u(gen);
    d.beta_l = 0.2 * u(gen);
    d.interaction_prob = u(gen);
    d.event_period = 1 + static_cast<int>(gen() % 5);
    d.event_effect = 0.3 * u(gen);
    d.visit_loneliness_effect = 0.3 * u(gen);
    d.visit_stress_effect = 0.3 * u(gen);
    d.stress_coupling = 0.5 * u(gen);
    d.frailty_drift = 0.05 * u(gen);
    d.energy_recovery = 0.2 * u(gen);
    d.event_energy_cost = 0.5 * u(gen);
    auto w = init_world(gen(), 2 + static_cast<int>(gen() % 12), d);
    for (int day = 0; day < 30; ++day) {
      const PolicyParams p(u(gen) * 2, u(gen), u(gen));
      step_day(w, (gen() & 1) ? std::optional<PolicyParams>(p) : std::nullopt);
      if (w.day % 7 == 0) update_network(w);
      REQUIRE(all_bounded(w));
    }
  }
}

TEST_CASE("baseline and age are fixed after init") {
  auto w = init_world(300, 30);
  const auto before = w.agents;
  for (int day = 0; day < 50; ++day) step_day(w, PolicyParams{});
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w.agents[i].baseline_loneliness == before[i].baseline_loneliness);
    CHECK(w.agents[i].age == before[i].age);
  }
}

TEST_CASE("isolated agents converge toward baseline without crossing it") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 1000; ++trial) {
    DynamicsConfig d = quiet_dynamics();
    d.alpha_l = 0.01 + 0.5 * (gen() % 1000) / 1000.0;
    auto w = init_world(gen(), 4, d);
    std::vector<double> gap;
    for (const auto &a : w.agents) gap.push_back(a.loneliness - a.baseline_loneliness);
    for (int day = 0; day < 40; ++day) {
      step_day(w, std::nullopt);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double g = w.agents[i].loneliness - w.agents[i].baseline_loneliness;
        REQUIRE(g * gap[i] >= 0.0);
        REQUIRE(std::fabs(g) <= std::fabs(gap[i]));
        gap[i] = g;
      }
    }
  }
}

TEST_CASE("determinism of full trajectories under a policy schedule") {
  auto run = [](std::uint64_t seed) {
    auto w = init_world(seed, 30);
    std::vector<double> means;
    for (int day = 0; day < 200; ++day) {
      step_day(w, PolicyParams(1.0 + 0.001 * day, 0.6 - 0.001 * day, 0.3));
      if (w.day % 7 == 0) update_network(w);
      means.push_back(mean_loneliness(w));
    }
    return std::make_pair(means, w.total_visits);
  };
  CHECK(run(300) == run(300));
}

TEST_CASE("200-day baseline run matches the straight-line oracle") {
  for (std::uint64_t seed : {300ULL, 400ULL, 42ULL}) {
    DynamicsConfig d;
    auto w = init_world(seed, 30, d);
    for (int day = 0; day < 200; ++day) {
      step_day(w, std::nullopt);
      if (w.day % 7 == 0) update_network(w);
    }
    CHECK(mean_loneliness(w) == doctest::Approx(oracle_final_mean(seed, 30, 200, d)).epsilon(1e-12));
  }
}
