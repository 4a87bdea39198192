#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "carelab/network.hpp"
#include "carelab/policy.hpp"
#include "carelab/rng.hpp"

namespace carelab {

struct AgentState {
  int id = 0;
  double loneliness = 0.0;
  double frailty = 0.0;
  double stress = 0.0;
  double energy = 0.0;
  double baseline_loneliness = 0.0;  // fixed at init
  double age = 0.0;                  // years, fixed at init

  bool operator==(const AgentState &) const = default;
};

/// Coefficients of the daily update. All fields have calibrated defaults;
/// recalibration is a config change, not a code change.
struct DynamicsConfig {
  double alpha_l = 0.05;          // reversion rate toward baseline, per day
  double beta_l = 0.001;          // loneliness reduction per interaction
  double interaction_prob = 0.3;  // per-edge daily activation probability
  int event_period = 3;           // days between social events
  double event_effect = 0.004;    // loneliness reduction per event per unit intensity
  double visit_loneliness_effect = 0.006;
  double visit_stress_effect = 0.01;
  double frailty_drift = 0.0005;
  double frailty_stress_coeff = 0.001;
  double stress_coupling = 0.005;
  double energy_recovery = 0.02;
  double event_energy_cost = 0.05;
  double event_energy_gate = 0.2;
  double tie_formation_rate = 0.2;
  double degree_saturation = 6.0;
  int candidate_pairs_per_week = 10;
  /// Initial per-pair edge probability; unset means 4 / (N - 1).
  std::optional<double> init_edge_prob;

  void validate() const;
  double edge_probability(int n_agents) const;

  bool operator==(const DynamicsConfig &) const = default;
};

/// One simulated facility. `day` counts completed days.
struct World {
  int day = 0;
  std::vector<AgentState> agents;
  SocialNetwork network;
  Rng rng;
  DynamicsConfig dynamics;
  /// Most recent day last; holds exactly min(day, 7) daily count vectors.
  std::deque<std::vector<int>> interaction_log;
  int visits_today = 0;
  int visits_attempted_today = 0;
  long total_visits = 0;

  std::size_t size() const { return agents.size(); }
  /// Per-day interaction counts for one agent over the retained window, oldest first.
  std::vector<int> interaction_history(int id) const;

  bool operator==(const World &) const = default;
};

inline constexpr int kInteractionWindowDays = 7;

/// Source of uniform [0,1) draws for home visits; defaults to the world generator.
using UniformSource = std::function<double()>;

/// Draw order: per agent by ascending id (baseline, loneliness offset,
/// frailty, stress, energy, age), then one draw per pair (i < j) in
/// lexicographic order for the initial edges.
World init_world(std::uint64_t seed, int n_agents, const DynamicsConfig &dynamics = {});

/// Advances one day. `policy` empty means no interventions (baseline runs).
void step_day(World &world, const std::optional<PolicyParams> &policy);

/// Weekly homophilous tie formation. Returns the number of edges added.
int update_network(World &world);

/// Tie probability for a candidate pair.
double tie_probability(const DynamicsConfig &dynamics, double loneliness_a, double loneliness_b,
                       int degree_a, int degree_b);

/// Returns the number of participants.
int apply_social_event(World &world, double theta_s);

/// Returns the number of successful visits. Eligible agents (loneliness >
/// theta_t) each consume one draw, in ascending id order.
int apply_home_visits(World &world, double theta_t, double theta_p);
int apply_home_visits(World &world, double theta_t, double theta_p, const UniformSource &draw);

double mean_loneliness(const World &world);

/// Clip every dynamic state variable into [0, 1].
void clip_states(World &world);

}  // namespace carelab
