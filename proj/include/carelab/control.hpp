#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carelab/diagnosis.hpp"
#include "carelab/llm_client.hpp"
#include "carelab/policy.hpp"

namespace carelab {

struct ControlConfig {
  double risk_threshold = 0.40;
  double priority_threshold = 0.75;
  double update_cap = 0.05;
  double theta_t_step = 0.02;
  double theta_p_step = 0.05;
  double social_gain = 0.1;

  /// Thresholds in (0,1), cap and steps positive. A step larger than the cap
  /// is allowed; the cap then binds it.
  void validate() const;

  bool operator==(const ControlConfig &) const = default;
};

nlohmann::json to_json(const ControlConfig &c);

/// One rule that fired, with the inequalities that made it fire.
struct FiredRule {
  std::string rule;
  std::string evidence;

  bool operator==(const FiredRule &) const = default;
};

namespace rules {
inline constexpr const char *kSocialEscalation = "social-intensity-escalation";
inline constexpr const char *kVisitThreshold = "visit-threshold-lowering";
inline constexpr const char *kVisitProbability = "visit-probability-raising";
inline constexpr const char *kLlmMapping = "llm-mapping";
inline constexpr const char *kBlackBox = "black-box";
}  // namespace rules

struct ControlDecision {
  double delta_theta_s = 0.0;
  double delta_theta_t = 0.0;
  double delta_theta_p = 0.0;
  std::vector<FiredRule> fired_rules;
  PolicyParams new_params;  // post-clip
  std::optional<std::string> violation;
  std::vector<std::string> raw_responses;

  bool is_zero() const { return delta_theta_s == 0.0 && delta_theta_t == 0.0 && delta_theta_p == 0.0; }
  bool operator==(const ControlDecision &) const = default;
};

/// Bounded threshold rules. Deltas are the rule outputs (each capped at
/// update_cap); new_params is prior + delta clipped into the lever ranges.
/// Pure.
ControlDecision closed_loop_update(const MacroStats &stats, const PolicyParams &params,
                                   const ControlConfig &config = {});

/// Fixed switching rule: intensity 1.2 when r > 0.4, else 1.0; visits at (0.6, 0.3).
PolicyParams llm_mapping_update(const MacroStats &stats);

/// Same rule expressed as a decision against the prior params, for the audit log.
ControlDecision llm_mapping_decision(const MacroStats &stats, const PolicyParams &params);

std::string black_box_prompt(const MacroStats &stats, const PolicyParams &params);

/// Lets the model propose parameter values directly. Bounds are enforced, no
/// step cap. A proposal that never validates leaves the params unchanged and
/// records the violation. Throws BackendUnavailable if transport keeps failing.
ControlDecision black_box_update(const MacroStats &stats, const PolicyParams &params, const BackendConfig &backend,
                                 LlmTransport &transport);

/// Deterministic offline proposer standing in for the model in black-box runs
/// with the heuristic backend. Reads the state block embedded in the prompt and
/// jumps straight to a target setting.
class HeuristicProposer : public LlmTransport {
 public:
  std::string complete(const std::string &prompt) override;
};

}  // namespace carelab
