#pragma once

#include <array>
#include <string_view>

namespace carelab {

/// The five ablation conditions.
enum class Condition { Baseline, FixedPolicy, LLMMapping, ClosedLoop, BlackBox };

inline constexpr std::array<Condition, 5> kAllConditions = {
    Condition::Baseline, Condition::FixedPolicy, Condition::LLMMapping, Condition::ClosedLoop, Condition::BlackBox,
};

std::string_view to_string(Condition c);
/// Accepts the canonical names plus a few short aliases ("fixed", "closed", "mapping", "blackbox").
Condition parse_condition(std::string_view text);

/// Whether the condition runs the diagnosis layer every cycle.
constexpr bool uses_diagnosis(Condition c) {
  return c == Condition::LLMMapping || c == Condition::ClosedLoop || c == Condition::BlackBox;
}

/// Whether interventions (events, visits) are active at all.
constexpr bool uses_interventions(Condition c) { return c != Condition::Baseline; }

}  // namespace carelab
