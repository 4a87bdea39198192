#include "carelab/sim.hpp"

#include <cmath>
#include <string>

#include "carelab/errors.hpp"

namespace carelab {

namespace {

// Initial-state distributions. Baselines sit in [0.5, 0.9] so an untreated
// population hovers in the high-loneliness regime typical of residential care.
constexpr Interval kBaselineInit{0.5, 0.9};
constexpr double kLonelinessJitter = 0.1;
constexpr Interval kFrailtyInit{0.5, 0.9};
constexpr Interval kStressInit{0.2, 0.5};
constexpr Interval kEnergyInit{0.4, 1.0};
constexpr Interval kAgeInit{65.0, 95.0};

constexpr Interval kUnit{0.0, 1.0};

void require(bool ok, const std::string &what) {
  if (!ok) throw InvalidConfiguration("invalid dynamics config: " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void DynamicsConfig::validate() const {
  require(is_probability(alpha_l), "alpha_l must lie in [0,1]");
  require(beta_l >= 0.0, "beta_l must be >= 0");
  require(is_probability(interaction_prob), "interaction_prob must lie in [0,1]");
  require(event_period >= 1, "event_period must be >= 1");
  require(event_effect >= 0.0, "event_effect must be >= 0");
  require(visit_loneliness_effect >= 0.0, "visit_loneliness_effect must be >= 0");
  require(visit_stress_effect >= 0.0, "visit_stress_effect must be >= 0");
  require(frailty_drift >= 0.0, "frailty_drift must be >= 0");
  require(frailty_stress_coeff >= 0.0, "frailty_stress_coeff must be >= 0");
  require(stress_coupling >= 0.0, "stress_coupling must be >= 0");
  require(energy_recovery >= 0.0, "energy_recovery must be >= 0");
  require(event_energy_cost >= 0.0, "event_energy_cost must be >= 0");
  require(is_probability(event_energy_gate), "event_energy_gate must lie in [0,1]");
  require(is_probability(tie_formation_rate), "tie_formation_rate must lie in [0,1]");
  require(degree_saturation > 0.0, "degree_saturation must be > 0");
  require(candidate_pairs_per_week >= 0, "candidate_pairs_per_week must be >= 0");
  if (init_edge_prob) require(is_probability(*init_edge_prob), "init_edge_prob must lie in [0,1]");
}

double DynamicsConfig::edge_probability(int n_agents) const {
  if (init_edge_prob) return *init_edge_prob;
  return std::min(1.0, 4.0 / static_cast<double>(n_agents - 1));
}

std::vector<int> World::interaction_history(int id) const {
  std::vector<int> out;
  out.reserve(interaction_log.size());
  for (const auto &day_counts : interaction_log) out.push_back(day_counts.at(id));
  return out;
}

World init_world(std::uint64_t seed, int n_agents, const DynamicsConfig &dynamics) {
  if (n_agents < 2)
    throw InvalidConfiguration("n_agents must be >= 2, got " + std::to_string(n_agents));
  dynamics.validate();

  World world;
  world.rng = Rng(seed);
  world.dynamics = dynamics;
  world.network = SocialNetwork(n_agents);
  world.agents.reserve(n_agents);

  Rng &rng = world.rng;
  for (int id = 0; id < n_agents; ++id) {
    AgentState a;
    a.id = id;
    a.baseline_loneliness = rng.uniform(kBaselineInit.lo, kBaselineInit.hi);
    a.loneliness = kUnit.clip(a.baseline_loneliness + rng.uniform(-kLonelinessJitter, kLonelinessJitter));
    a.frailty = rng.uniform(kFrailtyInit.lo, kFrailtyInit.hi);
    a.stress = rng.uniform(kStressInit.lo, kStressInit.hi);
    a.energy = rng.uniform(kEnergyInit.lo, kEnergyInit.hi);
    a.age = rng.uniform(kAgeInit.lo, kAgeInit.hi);
    world.agents.push_back(a);
  }

  const double p_edge = dynamics.edge_probability(n_agents);
  for (int i = 0; i < n_agents; ++i)
    for (int j = i + 1; j < n_agents; ++j)
      if (rng.uniform() < p_edge) world.network.add_edge(i, j);

  return world;
}

void clip_states(World &world) {
  for (auto &a : world.agents) {
    a.loneliness = kUnit.clip(a.loneliness);
    a.frailty = kUnit.clip(a.frailty);
    a.stress = kUnit.clip(a.stress);
    a.energy = kUnit.clip(a.energy);
  }
}

int apply_social_event(World &world, double theta_s) {
  const auto &cfg = world.dynamics;
  int participants = 0;
  for (auto &a : world.agents) {
    if (a.energy <= cfg.event_energy_gate) continue;
    a.loneliness -= cfg.event_effect * theta_s;
    a.energy -= cfg.event_energy_cost;
    ++participants;
  }
  return participants;
}

int apply_home_visits(World &world, double theta_t, double theta_p) {
  return apply_home_visits(world, theta_t, theta_p, [&world] { return world.rng.uniform(); });
}

int apply_home_visits(World &world, double theta_t, double theta_p, const UniformSource &draw) {
  const auto &cfg = world.dynamics;
  int delivered = 0;
  int attempted = 0;
  for (auto &a : world.agents) {
    if (!(a.loneliness > theta_t)) continue;
    ++attempted;
    if (draw() < theta_p) {
      a.loneliness -= cfg.visit_loneliness_effect;
      a.stress -= cfg.visit_stress_effect;
      ++delivered;
    }
  }
  world.visits_attempted_today += attempted;
  world.visits_today += delivered;
  world.total_visits += delivered;
  return delivered;
}

void step_day(World &world, const std::optional<PolicyParams> &policy) {
  const auto &cfg = world.dynamics;
  const int today = world.day;
  world.visits_today = 0;
  world.visits_attempted_today = 0;

  std::vector<int> counts(world.size(), 0);

  // (1) edge activations
  for (const auto &[i, j] : world.network.edges()) {
    if (world.rng.uniform() >= cfg.interaction_prob) continue;
    for (int id : {i, j}) {
      auto &a = world.agents[id];
      a.loneliness -= cfg.beta_l;
      a.stress -= cfg.beta_l / 2.0;
      ++counts[id];
    }
  }

  for (auto &a : world.agents) {
    // (2) reversion toward baseline
    a.loneliness += cfg.alpha_l * (a.baseline_loneliness - a.loneliness);
    // (3) loneliness -> stress
    a.stress += cfg.stress_coupling * (a.loneliness - 0.5);
    // (4) frailty accumulation
    a.frailty += cfg.frailty_drift + cfg.frailty_stress_coeff * a.stress;
    // (5) energy
    a.energy += cfg.energy_recovery;
  }

  // (6) interventions
  if (policy) {
    if (today % cfg.event_period == 0) apply_social_event(world, policy->theta_s());
    apply_home_visits(world, policy->theta_t(), policy->theta_p());
  }

  clip_states(world);

  world.interaction_log.push_back(std::move(counts));
  while (world.interaction_log.size() > static_cast<std::size_t>(kInteractionWindowDays))
    world.interaction_log.pop_front();

  ++world.day;
}

double tie_probability(const DynamicsConfig &dynamics, double loneliness_a, double loneliness_b,
                       int degree_a, int degree_b) {
  const double similarity = 1.0 - std::abs(loneliness_a - loneliness_b);
  const double crowding = std::exp(-static_cast<double>(degree_a + degree_b) / (2.0 * dynamics.degree_saturation));
  return dynamics.tie_formation_rate * similarity * crowding;
}

int update_network(World &world) {
  const auto &cfg = world.dynamics;
  const auto candidates = world.network.non_edges();
  if (candidates.empty()) return 0;

  int added = 0;
  for (int k = 0; k < cfg.candidate_pairs_per_week; ++k) {
    const auto [i, j] = candidates[world.rng.index(candidates.size())];
    const double u = world.rng.uniform();
    if (world.network.has_edge(i, j)) continue;  // drawn twice this round
    const double p = tie_probability(cfg, world.agents[i].loneliness, world.agents[j].loneliness,
                                     world.network.degree(i), world.network.degree(j));
    if (u < p) {
      world.network.add_edge(i, j);
      ++added;
    }
  }
  return added;
}

double mean_loneliness(const World &world) {
  double sum = 0.0;
  for (const auto &a : world.agents) sum += a.loneliness;
  return sum / static_cast<double>(world.size());
}

}  // namespace carelab
