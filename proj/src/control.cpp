#include "carelab/control.hpp"

#include <algorithm>
#include <cmath>

#include "carelab/errors.hpp"

namespace carelab {

using nlohmann::json;

namespace {

std::string num(double v) { return json(v).dump(); }

std::string gt(const char *name, double lhs, double rhs) {
  return std::string(name) + "=" + num(lhs) + " > " + num(rhs);
}

std::string lt(const char *name, double lhs, double rhs) {
  return std::string(name) + "=" + num(lhs) + " < " + num(rhs);
}

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

struct Proposal {
  double theta_s;
  double theta_t;
  double theta_p;
};

Proposal parse_proposal(const std::string &raw) {
  auto object_text = extract_first_json_object(raw);
  if (!object_text) throw SchemaViolation("proposal schema violation: no JSON object found", raw);
  const json obj = json::parse(*object_text);
  auto field = [&](const char *key) {
    if (!obj.contains(key) || !obj.at(key).is_number())
      throw SchemaViolation(std::string("proposal schema violation: missing numeric field '") + key + "'", raw);
    const double v = obj.at(key).get<double>();
    if (!std::isfinite(v))
      throw SchemaViolation(std::string("proposal schema violation: non-finite '") + key + "'", raw);
    return v;
  };
  return {field("theta_s"), field("theta_t"), field("theta_p")};
}

}  // namespace

void ControlConfig::validate() const {
  if (!in_open_unit(risk_threshold)) throw InvalidConfiguration("risk_threshold must lie in (0,1)");
  if (!in_open_unit(priority_threshold)) throw InvalidConfiguration("priority_threshold must lie in (0,1)");
  if (!(update_cap > 0.0)) throw InvalidConfiguration("update_cap must be > 0");
  if (!(theta_t_step > 0.0) || !(theta_p_step > 0.0)) throw InvalidConfiguration("steps must be > 0");
  if (!(social_gain >= 0.0)) throw InvalidConfiguration("social_gain must be >= 0");
}

json to_json(const ControlConfig &c) {
  return {
      {"risk_threshold", c.risk_threshold}, {"priority_threshold", c.priority_threshold},
      {"update_cap", c.update_cap},         {"theta_t_step", c.theta_t_step},
      {"theta_p_step", c.theta_p_step},     {"social_gain", c.social_gain},
  };
}

ControlDecision closed_loop_update(const MacroStats &stats, const PolicyParams &params, const ControlConfig &config) {
  ControlDecision d;
  const double cap = config.update_cap;

  if (stats.r > config.risk_threshold && stats.p_s > config.priority_threshold) {
    d.delta_theta_s = std::min(cap, config.social_gain * stats.p_s);
    d.fired_rules.push_back({rules::kSocialEscalation, gt("r", stats.r, config.risk_threshold) + " and " +
                                                           gt("p_s", stats.p_s, config.priority_threshold)});
  }

  const bool visit_pressure = stats.p_v > config.priority_threshold;
  if (visit_pressure && params.theta_t() > kVisitThresholdRange.lo) {
    d.delta_theta_t = -std::min(config.theta_t_step, cap);
    d.fired_rules.push_back({rules::kVisitThreshold, gt("p_v", stats.p_v, config.priority_threshold) + " and " +
                                                         gt("theta_t", params.theta_t(), kVisitThresholdRange.lo)});
  }
  if (visit_pressure && params.theta_p() < kVisitProbabilityRange.hi) {
    d.delta_theta_p = std::min(config.theta_p_step, cap);
    d.fired_rules.push_back({rules::kVisitProbability, gt("p_v", stats.p_v, config.priority_threshold) + " and " +
                                                           lt("theta_p", params.theta_p(), kVisitProbabilityRange.hi)});
  }

  d.new_params = params.adjusted(d.delta_theta_s, d.delta_theta_t, d.delta_theta_p);
  return d;
}

PolicyParams llm_mapping_update(const MacroStats &stats) {
  return {stats.r > 0.4 ? 1.2 : 1.0, 0.6, 0.3};
}

ControlDecision llm_mapping_decision(const MacroStats &stats, const PolicyParams &params) {
  ControlDecision d;
  d.new_params = llm_mapping_update(stats);
  d.delta_theta_s = d.new_params.theta_s() - params.theta_s();
  d.delta_theta_t = d.new_params.theta_t() - params.theta_t();
  d.delta_theta_p = d.new_params.theta_p() - params.theta_p();
  d.fired_rules.push_back({rules::kLlmMapping, stats.r > 0.4 ? gt("r", stats.r, 0.4) : "r=" + num(stats.r) + " <= 0.4"});
  return d;
}

std::string black_box_prompt(const MacroStats &stats, const PolicyParams &params) {
  const json state = {
      {"r", stats.r},
      {"p_s", stats.p_s},
      {"p_v", stats.p_v},
      {"theta_s", params.theta_s()},
      {"theta_t", params.theta_t()},
      {"theta_p", params.theta_p()},
  };
  std::string prompt =
      "You control intervention policy in an elderly care facility simulation.\n"
      "Population state and current parameters:\n";
  prompt += state.dump();
  prompt +=
      "\nr is the high-risk proportion, p_s and p_v the mean priorities for social events and home visits.\n"
      "theta_s is social event intensity in [0.8, 1.5], theta_t the home-visit eligibility threshold in "
      "[0.4, 0.6], theta_p the home-visit success probability in [0.15, 0.5].\n"
      "Choose new parameter values to reduce loneliness. Reply with ONLY a JSON object: "
      "{\"theta_s\": <number>, \"theta_t\": <number>, \"theta_p\": <number>}\n";
  return prompt;
}

ControlDecision black_box_update(const MacroStats &stats, const PolicyParams &params, const BackendConfig &backend,
                                 LlmTransport &transport) {
  const std::string prompt = black_box_prompt(stats, params);
  ControlDecision d;
  d.new_params = params;
  int calls = 0;
  int transport_failures = 0;
  std::string last_transport_error;

  for (int attempt = 0; attempt <= backend.max_retries; ++attempt) {
    ++calls;
    try {
      std::string raw = transport.complete(prompt);
      d.raw_responses.push_back(raw);
      const Proposal p = parse_proposal(raw);
      d.new_params = PolicyParams(p.theta_s, p.theta_t, p.theta_p);
      d.delta_theta_s = d.new_params.theta_s() - params.theta_s();
      d.delta_theta_t = d.new_params.theta_t() - params.theta_t();
      d.delta_theta_p = d.new_params.theta_p() - params.theta_p();
      d.fired_rules.push_back({rules::kBlackBox, "proposal " + json{{"theta_s", p.theta_s},
                                                                     {"theta_t", p.theta_t},
                                                                     {"theta_p", p.theta_p}}.dump()});
      d.violation.reset();
      return d;
    } catch (const SchemaViolation &e) {
      d.violation = e.what();
    } catch (const TransportError &e) {
      ++transport_failures;
      last_transport_error = e.what();
    }
  }
  if (transport_failures == calls)
    throw BackendUnavailable("model backend unavailable after " + std::to_string(calls) +
                             " attempts: " + last_transport_error);
  return d;
}

std::string HeuristicProposer::complete(const std::string &prompt) {
  auto state_text = extract_first_json_object(prompt);
  if (!state_text) return "no state block in prompt";
  const json s = json::parse(*state_text);
  const double r = s.at("r").get<double>();
  const double p_s = s.at("p_s").get<double>();
  const double p_v = s.at("p_v").get<double>();
  const json proposal = {
      {"theta_s", 0.8 + 0.7 * p_s},
      {"theta_t", 0.6 - 0.4 * r},
      {"theta_p", 0.15 + 0.35 * p_v},
  };
  return proposal.dump();
}

}  // namespace carelab
