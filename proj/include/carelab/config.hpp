#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "carelab/control.hpp"
#include "carelab/diagnosis.hpp"
#include "carelab/sim.hpp"

namespace carelab {

inline const std::vector<std::uint64_t> kHoldoutSeeds = {300, 400, 500, 600};
inline const std::vector<std::uint64_t> kTrainSeeds = {42, 100, 200};

bool is_train_seed(std::uint64_t seed);

/// Everything one run needs besides the condition and the seed.
struct ExperimentConfig {
  DynamicsConfig dynamics;
  ControlConfig control;
  BackendConfig backend;
  int n_agents = 30;
  int days = 200;
  int diagnosis_period = 7;
  std::vector<std::uint64_t> seeds = kHoldoutSeeds;

  void validate() const;
};

nlohmann::json to_json(const DynamicsConfig &c);
nlohmann::json to_json(const BackendConfig &c);
nlohmann::json to_json(const ExperimentConfig &c);

/// Overlay the keys present in `j` onto `base`. Unknown keys are rejected.
DynamicsConfig dynamics_from_json(const nlohmann::json &j, DynamicsConfig base = {});
ControlConfig control_from_json(const nlohmann::json &j, ControlConfig base = {});
BackendConfig backend_from_json(const nlohmann::json &j, BackendConfig base = {});

/// Sections "dynamics", "control", "backend", "experiment". A document with
/// none of these sections is read as a bare dynamics block.
ExperimentConfig config_from_json(const nlohmann::json &j, ExperimentConfig base = {});

/// TOML subset (tables, scalars, arrays) to JSON, using CLI11's config reader.
nlohmann::json toml_to_json(std::istream &in);

/// Reads .json or .toml (by extension; anything else is tried as JSON).
nlohmann::json read_config_document(const std::filesystem::path &path);
ExperimentConfig load_config(const std::filesystem::path &path, ExperimentConfig base = {});

}  // namespace carelab
