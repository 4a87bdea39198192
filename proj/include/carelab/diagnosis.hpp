#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "carelab/llm_client.hpp"
#include "carelab/sim.hpp"

namespace carelab {

enum class RiskLabel { Low, Medium, High };

std::string_view to_string(RiskLabel label);
std::optional<RiskLabel> parse_risk_label(std::string_view text);

/// High above 0.6, Medium in (0.4, 0.6], Low otherwise.
RiskLabel risk_label_for(double risk);

inline constexpr double kHighRiskThreshold = 0.6;
inline constexpr double kMediumRiskThreshold = 0.4;

struct Diagnosis {
  int agent_id = -1;
  double risk_loneliness = 0.0;
  RiskLabel risk_label = RiskLabel::Low;
  RiskLabel risk_frailty_label = RiskLabel::Low;
  std::string primary_driver;
  double priority_social = 0.0;
  double priority_visit = 0.0;

  bool operator==(const Diagnosis &) const = default;
};

nlohmann::json to_json(const Diagnosis &d);
std::string serialize(const Diagnosis &d);

/// Population-level view of one diagnosis cycle; the only thing the
/// controllers ever see.
struct MacroStats {
  double r = 0.0;    // high-risk proportion over the whole population
  double p_s = 0.0;  // mean social priority over diagnosed agents
  double p_v = 0.0;  // mean visit priority over diagnosed agents
  int n_diagnosed = 0;
  int day = 0;

  bool operator==(const MacroStats &) const = default;
};

nlohmann::json to_json(const MacroStats &s);
MacroStats macro_stats_from_json(const nlohmann::json &j);

enum class BackendKind { Heuristic, LLM };
enum class FallbackPolicy { SkipAgent, UseHeuristic };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);
std::string_view to_string(FallbackPolicy policy);
FallbackPolicy parse_fallback_policy(std::string_view text);

struct BackendConfig {
  BackendKind kind = BackendKind::Heuristic;
  std::string endpoint_url = "http://localhost:11434";
  std::string model_name = "llama3:8b";
  double temperature = 0.1;
  int timeout_ms = 30000;
  int max_retries = 2;
  FallbackPolicy fallback = FallbackPolicy::SkipAgent;
  /// Diagnose every agent instead of only those above the loneliness cut.
  bool diagnose_all = false;
  /// Keep raw model responses in the audit log.
  bool store_raw_responses = true;

  void validate() const;
};

/// Ids of agents with loneliness > 0.6 (ascending), or all ids.
std::vector<int> select_diagnosable(const World &world, bool diagnose_all = false);

inline constexpr std::string_view kPromptTemplateVersion = "diagnosis-prompt/v1";

/// Digest identifying the exact prompt template in use.
std::string prompt_template_hash();

/// `history` holds per-day interaction counts over the retained window (<= 7 days).
std::string build_prompt(const AgentState &agent, std::span<const int> history, int degree);

/// Extracts and validates the first JSON object in `text`. Numeric risk is
/// authoritative: the label is recomputed from it. Throws SchemaViolation.
Diagnosis parse_response(std::string_view text);

/// Extract the first balanced {...} object from free text; nullopt if none.
std::optional<std::string> extract_first_json_object(std::string_view text);

/// Deterministic stand-in backend.
Diagnosis heuristic_diagnose(const AgentState &agent, int degree);

struct LlmDiagnosisOutcome {
  std::optional<Diagnosis> diagnosis;  // empty when the agent was skipped
  std::vector<std::string> raw_responses;
  int calls = 0;
  bool used_fallback = false;
  std::optional<std::string> violation;
  double last_call_ms = 0.0;
};

/// Query the model for one agent, retrying schema violations and transport
/// failures up to max_retries. Throws BackendUnavailable when transport keeps
/// failing and the fallback is SkipAgent.
LlmDiagnosisOutcome llm_diagnose(const AgentState &agent, std::span<const int> history, int degree,
                                 const BackendConfig &config, LlmTransport &transport);

/// r over the full population, priorities over the diagnosed set.
MacroStats aggregate(std::span<const Diagnosis> diagnoses, int population_size, int day = 0);

/// What one diagnosis cycle hands to the rest of the system.
struct CycleReport {
  MacroStats stats;
  int llm_calls = 0;
  int skipped_agents = 0;
  std::string prompt_hash;  // empty for the heuristic backend
  std::vector<std::string> raw_responses;
  std::vector<double> call_ms;
};

/// Runs selection, per-agent diagnosis and aggregation. Individual diagnoses
/// stay inside; only the aggregate leaves.
class DiagnosisEngine {
 public:
  explicit DiagnosisEngine(BackendConfig config, std::shared_ptr<LlmTransport> transport = nullptr);

  CycleReport run_cycle(const World &world) const;
  const BackendConfig &config() const { return config_; }

 private:
  BackendConfig config_;
  std::shared_ptr<LlmTransport> transport_;
};

}  // namespace carelab
