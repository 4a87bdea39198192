#include <doctest.h>

#include <sstream>

#include "carelab/config.hpp"
#include "carelab/errors.hpp"
#include "support.hpp"

using namespace carelab;

TEST_CASE("shipped default config equals the built-in defaults") {
  const auto cfg = load_config(std::filesystem::path(CARELAB_SOURCE_DIR) / "configs" / "default.json");
  const ExperimentConfig defaults;
  CHECK(cfg.dynamics == defaults.dynamics);
  CHECK(cfg.control == defaults.control);
  CHECK(to_json(cfg.backend) == to_json(defaults.backend));
  CHECK(cfg.seeds == kHoldoutSeeds);
}

TEST_CASE("toml config overlays the named keys") {
  const auto cfg = load_config(std::filesystem::path(CARELAB_SOURCE_DIR) / "configs" / "ollama.toml");
  CHECK(cfg.backend.kind == BackendKind::LLM);
  CHECK(cfg.backend.timeout_ms == 60000);
  CHECK(cfg.backend.endpoint_url == "http://localhost:11434/api/generate");
  CHECK(cfg.control.update_cap == 0.05);
  CHECK(cfg.seeds == kHoldoutSeeds);
  CHECK(cfg.dynamics == DynamicsConfig{});
}

TEST_CASE("toml scalars, booleans and arrays") {
  std::istringstream in(
      "[dynamics]\nbeta_l = 0.002\nevent_period = 4\n[backend]\ndiagnose_all = true\n"
      "[experiment]\nseeds = [1, 2, 3]\ndays = 50\n");
  const auto j = toml_to_json(in);
  const auto cfg = config_from_json(j);
  CHECK(cfg.dynamics.beta_l == 0.002);
  CHECK(cfg.dynamics.event_period == 4);
  CHECK(cfg.backend.diagnose_all);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.days == 50);
}

TEST_CASE("bare dynamics document") {
  const auto cfg = config_from_json(nlohmann::json{{"alpha_l", 0.1}});
  CHECK(cfg.dynamics.alpha_l == 0.1);
}

TEST_CASE("unknown keys and bad types are rejected") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"control", {{"risk_treshold", 0.3}}}}), InvalidConfiguration);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"control", {{"risk_threshold", "high"}}}}), InvalidConfiguration);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"backend", {{"kind", "gpt"}}}}), InvalidConfiguration);
}

TEST_CASE("json round trip of a full config") {
  ExperimentConfig cfg;
  cfg.dynamics.init_edge_prob = 0.25;
  cfg.control.update_cap = 0.03;
  cfg.backend.fallback = FallbackPolicy::UseHeuristic;
  cfg.n_agents = 12;
  cfg.seeds = {42, 100};
  const auto back = config_from_json(to_json(cfg));
  CHECK(back.dynamics == cfg.dynamics);
  CHECK(back.control == cfg.control);
  CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("experiment validation") {
  ExperimentConfig cfg;
  cfg.n_agents = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfiguration);
  cfg = {};
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), InvalidConfiguration);
  CHECK(is_train_seed(42));
  CHECK_FALSE(is_train_seed(300));
}

TEST_CASE("missing config file is an error") {
  CHECK_THROWS(load_config("/nonexistent/carelab.json"));
}
