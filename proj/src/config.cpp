#include "carelab/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "carelab/errors.hpp"

namespace carelab {

using nlohmann::json;

namespace {

void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &section) {
  if (!j.is_object()) throw InvalidConfiguration("config section '" + section + "' must be a table/object");
  for (const auto &[key, _] : j.items())
    if (!known.contains(key)) throw InvalidConfiguration("unknown config key '" + section + "." + key + "'");
}

template <typename T>
void read(const json &j, const char *key, T &field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw InvalidConfiguration(std::string("config key '") + key + "' has the wrong type");
  }
}

json scalar_from_toml(const std::string &text) {
  if (text == "true") return true;
  if (text == "false") return false;
  auto parsed = json::parse(text, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_number()) return parsed;
  return text;
}

}  // namespace

bool is_train_seed(std::uint64_t seed) {
  return std::find(kTrainSeeds.begin(), kTrainSeeds.end(), seed) != kTrainSeeds.end();
}

void ExperimentConfig::validate() const {
  dynamics.validate();
  control.validate();
  backend.validate();
  if (n_agents < 2) throw InvalidConfiguration("n_agents must be >= 2");
  if (days < 1) throw InvalidConfiguration("days must be >= 1");
  if (diagnosis_period < 1) throw InvalidConfiguration("diagnosis_period must be >= 1");
  if (seeds.empty()) throw InvalidConfiguration("seed list must not be empty");
}

json to_json(const DynamicsConfig &c) {
  return {
      {"alpha_l", c.alpha_l},
      {"beta_l", c.beta_l},
      {"interaction_prob", c.interaction_prob},
      {"event_period", c.event_period},
      {"event_effect", c.event_effect},
      {"visit_loneliness_effect", c.visit_loneliness_effect},
      {"visit_stress_effect", c.visit_stress_effect},
      {"frailty_drift", c.frailty_drift},
      {"frailty_stress_coeff", c.frailty_stress_coeff},
      {"stress_coupling", c.stress_coupling},
      {"energy_recovery", c.energy_recovery},
      {"event_energy_cost", c.event_energy_cost},
      {"event_energy_gate", c.event_energy_gate},
      {"tie_formation_rate", c.tie_formation_rate},
      {"degree_saturation", c.degree_saturation},
      {"candidate_pairs_per_week", c.candidate_pairs_per_week},
      {"init_edge_prob", c.init_edge_prob ? json(*c.init_edge_prob) : json(nullptr)},
  };
}

json to_json(const BackendConfig &c) {
  return {
      {"kind", to_string(c.kind)},
      {"endpoint_url", c.endpoint_url},
      {"model_name", c.model_name},
      {"temperature", c.temperature},
      {"timeout_ms", c.timeout_ms},
      {"max_retries", c.max_retries},
      {"fallback", to_string(c.fallback)},
      {"diagnose_all", c.diagnose_all},
      {"store_raw_responses", c.store_raw_responses},
  };
}

json to_json(const ExperimentConfig &c) {
  return {
      {"dynamics", to_json(c.dynamics)},
      {"control", to_json(c.control)},
      {"backend", to_json(c.backend)},
      {"experiment", {{"n_agents", c.n_agents}, {"days", c.days}, {"diagnosis_period", c.diagnosis_period},
                      {"seeds", c.seeds}}},
  };
}

DynamicsConfig dynamics_from_json(const json &j, DynamicsConfig c) {
  reject_unknown(j,
                 {"alpha_l", "beta_l", "interaction_prob", "event_period", "event_effect", "visit_loneliness_effect",
                  "visit_stress_effect", "frailty_drift", "frailty_stress_coeff", "stress_coupling",
                  "energy_recovery", "event_energy_cost", "event_energy_gate", "tie_formation_rate",
                  "degree_saturation", "candidate_pairs_per_week", "init_edge_prob"},
                 "dynamics");
  read(j, "alpha_l", c.alpha_l);
  read(j, "beta_l", c.beta_l);
  read(j, "interaction_prob", c.interaction_prob);
  read(j, "event_period", c.event_period);
  read(j, "event_effect", c.event_effect);
  read(j, "visit_loneliness_effect", c.visit_loneliness_effect);
  read(j, "visit_stress_effect", c.visit_stress_effect);
  read(j, "frailty_drift", c.frailty_drift);
  read(j, "frailty_stress_coeff", c.frailty_stress_coeff);
  read(j, "stress_coupling", c.stress_coupling);
  read(j, "energy_recovery", c.energy_recovery);
  read(j, "event_energy_cost", c.event_energy_cost);
  read(j, "event_energy_gate", c.event_energy_gate);
  read(j, "tie_formation_rate", c.tie_formation_rate);
  read(j, "degree_saturation", c.degree_saturation);
  read(j, "candidate_pairs_per_week", c.candidate_pairs_per_week);
  if (j.contains("init_edge_prob")) {
    if (j.at("init_edge_prob").is_null()) c.init_edge_prob.reset();
    else {
      double p = 0.0;
      read(j, "init_edge_prob", p);
      c.init_edge_prob = p;
    }
  }
  return c;
}

ControlConfig control_from_json(const json &j, ControlConfig c) {
  reject_unknown(j,
                 {"risk_threshold", "priority_threshold", "update_cap", "theta_t_step", "theta_p_step",
                  "social_gain"},
                 "control");
  read(j, "risk_threshold", c.risk_threshold);
  read(j, "priority_threshold", c.priority_threshold);
  read(j, "update_cap", c.update_cap);
  read(j, "theta_t_step", c.theta_t_step);
  read(j, "theta_p_step", c.theta_p_step);
  read(j, "social_gain", c.social_gain);
  return c;
}

BackendConfig backend_from_json(const json &j, BackendConfig c) {
  reject_unknown(j,
                 {"kind", "endpoint_url", "model_name", "temperature", "timeout_ms", "max_retries", "fallback",
                  "diagnose_all", "store_raw_responses"},
                 "backend");
  if (j.contains("kind")) c.kind = parse_backend_kind(j.at("kind").get<std::string>());
  read(j, "endpoint_url", c.endpoint_url);
  read(j, "model_name", c.model_name);
  read(j, "temperature", c.temperature);
  read(j, "timeout_ms", c.timeout_ms);
  read(j, "max_retries", c.max_retries);
  if (j.contains("fallback")) c.fallback = parse_fallback_policy(j.at("fallback").get<std::string>());
  read(j, "diagnose_all", c.diagnose_all);
  read(j, "store_raw_responses", c.store_raw_responses);
  return c;
}

ExperimentConfig config_from_json(const json &j, ExperimentConfig c) {
  if (!j.is_object()) throw InvalidConfiguration("config document must be an object/table");
  const bool sectioned = j.contains("dynamics") || j.contains("control") || j.contains("backend") ||
                         j.contains("experiment");
  if (!sectioned) {
    c.dynamics = dynamics_from_json(j, c.dynamics);
    return c;
  }
  reject_unknown(j, {"dynamics", "control", "backend", "experiment"}, "<root>");
  if (j.contains("dynamics")) c.dynamics = dynamics_from_json(j.at("dynamics"), c.dynamics);
  if (j.contains("control")) c.control = control_from_json(j.at("control"), c.control);
  if (j.contains("backend")) c.backend = backend_from_json(j.at("backend"), c.backend);
  if (j.contains("experiment")) {
    const auto &e = j.at("experiment");
    reject_unknown(e, {"n_agents", "days", "diagnosis_period", "seeds"}, "experiment");
    read(e, "n_agents", c.n_agents);
    read(e, "days", c.days);
    read(e, "diagnosis_period", c.diagnosis_period);
    read(e, "seeds", c.seeds);
  }
  return c;
}

json toml_to_json(std::istream &in) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error &e) {
    throw InvalidConfiguration(std::string("malformed TOML config: ") + e.what());
  }
  json root = json::object();
  for (const auto &item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    json *node = &root;
    for (const auto &parent : item.parents) node = &(*node)[parent];
    if (item.inputs.size() == 1) {
      (*node)[item.name] = scalar_from_toml(item.inputs.front());
    } else {
      json arr = json::array();
      for (const auto &v : item.inputs) arr.push_back(scalar_from_toml(v));
      (*node)[item.name] = arr;
    }
  }
  return root;
}

json read_config_document(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfiguration("cannot read config file " + path.string());
  if (path.extension() == ".toml") return toml_to_json(in);
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw InvalidConfiguration("malformed JSON config " + path.string() + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path &path, ExperimentConfig base) {
  return config_from_json(read_config_document(path), std::move(base));
}

}  // namespace carelab
