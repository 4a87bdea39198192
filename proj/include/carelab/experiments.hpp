#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "carelab/audit.hpp"
#include "carelab/condition.hpp"
#include "carelab/config.hpp"
#include "carelab/stats.hpp"

namespace carelab {

/// Builds a fresh model transport per run; runs may execute on separate threads.
using TransportFactory = std::function<std::shared_ptr<LlmTransport>()>;

struct RunOptions {
  /// When set, the audit log is streamed to <audit_dir>/<condition>_seed<seed>.ndjson.
  std::optional<std::filesystem::path> audit_dir;
  /// Overrides the model transport (stub servers, scripted tests).
  TransportFactory transport_factory;
};

struct RunResult {
  std::uint64_t seed = 0;
  Condition condition = Condition::Baseline;
  double final_mean_loneliness = 0.0;
  std::vector<double> daily_means;          // days 0..T
  std::vector<PolicyParams> param_history;  // params in force on days 0..T
  std::vector<int> daily_visits;
  std::vector<int> high_risk_counts;        // agents with loneliness > 0.6
  long visit_count = 0;
  int llm_call_count = 0;
  std::string audit_path;
  AuditLog audit;
  bool aborted = false;
  std::string error;
};

/// Simulates one condition for cfg.days days from `seed`. Diagnosis and
/// control run every cfg.diagnosis_period days, after the weekly network
/// update. A backend failure marks the run aborted; the audit written so far
/// is kept.
RunResult run_condition(Condition condition, std::uint64_t seed, const ExperimentConfig &cfg,
                        const RunOptions &options = {});

struct ConditionSummary {
  Condition condition = Condition::Baseline;
  int n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // absent for a single seed
  double min = 0.0;
  double max = 0.0;
};

struct NamedComparison {
  Condition a;
  Condition b;  // comparison group
  stats::PairwiseComparison result;
};

struct SuiteResult {
  std::vector<RunResult> runs;  // ordered by (condition, seed) as given
  std::vector<ConditionSummary> summary;
  std::vector<NamedComparison> pairwise;

  std::vector<const RunResult *> aborted() const;
};

/// Final mean loneliness of the completed runs of one condition, in seed order.
std::vector<double> finals_for(const std::vector<RunResult> &runs, Condition condition);

std::vector<ConditionSummary> summarize(const std::vector<RunResult> &runs, const std::vector<Condition> &conditions);

/// Closed-loop against every alternative, black-box and mapping against fixed.
std::vector<NamedComparison> pairwise_table(const std::vector<RunResult> &runs,
                                            stats::TTestVariant variant = stats::TTestVariant::Student);

/// Cartesian product conditions x seeds. `jobs` <= 0 means hardware concurrency.
SuiteResult run_suite(const std::vector<Condition> &conditions, const std::vector<std::uint64_t> &seeds,
                      const ExperimentConfig &cfg, const RunOptions &options = {}, int jobs = 0,
                      stats::TTestVariant variant = stats::TTestVariant::Student);

struct SensitivityRow {
  std::string parameter;  // "baseline", "risk_threshold", "priority_threshold", "update_cap"
  std::string value;
  ControlConfig config;
  std::vector<double> finals;
  double mean = 0.0;
  std::optional<double> sd;
  double min = 0.0;
  double max = 0.0;
  double delta_pct = 0.0;  // vs the baseline row
  /// Whether this controller, replayed on the baseline row's recorded macro
  /// stats, reproduces every baseline decision.
  bool same_decisions_on_baseline_stream = true;
};

/// Baseline plus one-factor-at-a-time variants: risk {0.30, 0.50},
/// priority {0.65, 0.85}, cap {0.03, 0.08}.
std::vector<std::pair<std::string, ControlConfig>> sensitivity_grid(const ControlConfig &base);

std::vector<SensitivityRow> sensitivity_sweep(const ExperimentConfig &cfg, const std::vector<std::uint64_t> &seeds,
                                              const RunOptions &options = {}, int jobs = 0);

/// Replays the closed-loop controller with `config` over a recorded log and
/// reports whether deltas and parameters match the recorded decisions.
bool reproduces_decisions(const AuditLog &log, const ControlConfig &config);

// Output files. Numbers use shortest round-trip formatting, so identical
// inputs give byte-identical files.
std::string format_number(double v);
void write_results_csv(const std::vector<RunResult> &runs, const std::filesystem::path &path);
void write_summary_json(const std::vector<ConditionSummary> &summary, const std::vector<std::uint64_t> &seeds,
                        const std::filesystem::path &path);
void write_pairwise_json(const std::vector<NamedComparison> &rows, const std::filesystem::path &path);
void write_sensitivity_csv(const std::vector<SensitivityRow> &rows, const std::filesystem::path &path);
void write_trajectory_csv(const RunResult &run, const std::filesystem::path &path);
std::string trajectory_csv(const RunResult &run);

/// Reads back (condition, seed, final mean) rows written by write_results_csv.
std::vector<RunResult> read_results_csv(const std::filesystem::path &path);

}  // namespace carelab
