#include "carelab/condition.hpp"

#include <string>

#include "carelab/errors.hpp"

namespace carelab {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Baseline: return "baseline";
    case Condition::FixedPolicy: return "fixed-policy";
    case Condition::LLMMapping: return "llm-mapping";
    case Condition::ClosedLoop: return "closed-loop";
    case Condition::BlackBox: return "black-box";
  }
  return "baseline";
}

Condition parse_condition(std::string_view text) {
  for (auto c : kAllConditions)
    if (text == to_string(c)) return c;
  if (text == "fixed") return Condition::FixedPolicy;
  if (text == "mapping") return Condition::LLMMapping;
  if (text == "closed") return Condition::ClosedLoop;
  if (text == "blackbox") return Condition::BlackBox;
  throw InvalidConfiguration("unknown condition '" + std::string(text) + "'");
}

}  // namespace carelab
