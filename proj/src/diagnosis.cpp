#include "carelab/diagnosis.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "carelab/digest.hpp"
#include "carelab/errors.hpp"

namespace carelab {

using nlohmann::json;

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string fixed2(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

void replace_all(std::string &s, std::string_view token, std::string_view value) {
  for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos + value.size()))
    s.replace(pos, token.size(), value);
}

constexpr std::string_view kPromptTemplate =
    "You are assessing loneliness risk for a resident of an elderly care facility.\n"
    "Resident {{agent_id}} current state (all values on a 0-1 scale):\n"
    "- loneliness: {{loneliness}}\n"
    "- frailty: {{frailty}}\n"
    "- stress: {{stress}}\n"
    "- energy: {{energy}}\n"
    "Recent interaction history: {{window}}: {{interactions}} social interactions in total.\n"
    "Network position: {{degree}} social ties (degree).\n"
    "\n"
    "Reply with ONLY a JSON object and no other text, matching this schema:\n"
    "{\"agent_id\": <integer>, \"risk_loneliness\": <number in [0,1]>, "
    "\"risk_label\": \"Low\" | \"Medium\" | \"High\", "
    "\"risk_frailty_label\": \"Low\" | \"Medium\" | \"High\", "
    "\"primary_driver\": <short text>, "
    "\"priority_social\": <number in [0,1]>, \"priority_visit\": <number in [0,1]>}\n";

constexpr std::array<std::string_view, 3> kDriverTable = {
    "Social isolation",
    "Physical frailty",
    "Psychological stress",
};

[[noreturn]] void violation(const std::string &reason, std::string_view raw) {
  throw SchemaViolation("diagnosis schema violation: " + reason, std::string(raw));
}

double unit_number(const json &obj, const char *key, std::string_view raw) {
  if (!obj.contains(key)) violation(std::string("missing field '") + key + "'", raw);
  const auto &v = obj.at(key);
  if (!v.is_number()) violation(std::string("field '") + key + "' is not a number", raw);
  const double x = v.get<double>();
  if (!std::isfinite(x) || x < 0.0 || x > 1.0)
    violation(std::string("field '") + key + "' out of range [0,1]", raw);
  return x;
}

RiskLabel label_field(const json &obj, const char *key, std::string_view raw) {
  if (!obj.contains(key)) violation(std::string("missing field '") + key + "'", raw);
  const auto &v = obj.at(key);
  if (!v.is_string()) violation(std::string("field '") + key + "' is not a string", raw);
  auto label = parse_risk_label(v.get<std::string>());
  if (!label) violation(std::string("field '") + key + "' is not one of Low/Medium/High", raw);
  return *label;
}

}  // namespace

std::string_view to_string(RiskLabel label) {
  switch (label) {
    case RiskLabel::Low: return "Low";
    case RiskLabel::Medium: return "Medium";
    case RiskLabel::High: return "High";
  }
  return "Low";
}

std::optional<RiskLabel> parse_risk_label(std::string_view text) {
  for (auto label : {RiskLabel::Low, RiskLabel::Medium, RiskLabel::High})
    if (iequals(text, to_string(label))) return label;
  return std::nullopt;
}

RiskLabel risk_label_for(double risk) {
  if (risk > kHighRiskThreshold) return RiskLabel::High;
  if (risk > kMediumRiskThreshold) return RiskLabel::Medium;
  return RiskLabel::Low;
}

json to_json(const Diagnosis &d) {
  return {
      {"agent_id", d.agent_id},
      {"risk_loneliness", d.risk_loneliness},
      {"risk_label", to_string(d.risk_label)},
      {"risk_frailty_label", to_string(d.risk_frailty_label)},
      {"primary_driver", d.primary_driver},
      {"priority_social", d.priority_social},
      {"priority_visit", d.priority_visit},
  };
}

std::string serialize(const Diagnosis &d) { return to_json(d).dump(); }

json to_json(const MacroStats &s) {
  return {{"r", s.r}, {"p_s", s.p_s}, {"p_v", s.p_v}, {"n_diagnosed", s.n_diagnosed}, {"day", s.day}};
}

MacroStats macro_stats_from_json(const json &j) {
  MacroStats s;
  s.r = j.at("r").get<double>();
  s.p_s = j.at("p_s").get<double>();
  s.p_v = j.at("p_v").get<double>();
  s.n_diagnosed = j.at("n_diagnosed").get<int>();
  s.day = j.at("day").get<int>();
  return s;
}

std::string_view to_string(BackendKind kind) { return kind == BackendKind::LLM ? "llm" : "heuristic"; }

BackendKind parse_backend_kind(std::string_view text) {
  if (iequals(text, "heuristic")) return BackendKind::Heuristic;
  if (iequals(text, "llm")) return BackendKind::LLM;
  throw InvalidConfiguration("unknown backend kind '" + std::string(text) + "'");
}

std::string_view to_string(FallbackPolicy policy) {
  return policy == FallbackPolicy::UseHeuristic ? "use-heuristic" : "skip-agent";
}

FallbackPolicy parse_fallback_policy(std::string_view text) {
  if (iequals(text, "skip-agent") || iequals(text, "skip")) return FallbackPolicy::SkipAgent;
  if (iequals(text, "use-heuristic") || iequals(text, "heuristic")) return FallbackPolicy::UseHeuristic;
  throw InvalidConfiguration("unknown fallback policy '" + std::string(text) + "'");
}

void BackendConfig::validate() const {
  if (!(temperature >= 0.0)) throw InvalidConfiguration("backend temperature must be >= 0");
  if (max_retries < 0) throw InvalidConfiguration("backend max_retries must be >= 0");
  if (timeout_ms <= 0) throw InvalidConfiguration("backend timeout_ms must be > 0");
  if (kind == BackendKind::LLM && endpoint_url.empty())
    throw InvalidConfiguration("LLM backend requires an endpoint_url");
}

std::vector<int> select_diagnosable(const World &world, bool diagnose_all) {
  std::vector<int> ids;
  for (const auto &a : world.agents)
    if (diagnose_all || a.loneliness > kHighRiskThreshold) ids.push_back(a.id);
  return ids;
}

std::string prompt_template_hash() {
  std::string material(kPromptTemplateVersion);
  material += '\n';
  material += kPromptTemplate;
  return sha256_hex(material);
}

std::string build_prompt(const AgentState &agent, std::span<const int> history, int degree) {
  const int total = std::accumulate(history.begin(), history.end(), 0);
  std::string window;
  if (history.empty()) {
    window = "no history yet (simulation day 0)";
  } else if (history.size() < static_cast<std::size_t>(kInteractionWindowDays)) {
    window = "past " + std::to_string(history.size()) + " days only (window shorter than 7 days)";
  } else {
    window = "past 7 days";
  }

  std::string prompt(kPromptTemplate);
  replace_all(prompt, "{{agent_id}}", std::to_string(agent.id));
  replace_all(prompt, "{{loneliness}}", fixed2(agent.loneliness));
  replace_all(prompt, "{{frailty}}", fixed2(agent.frailty));
  replace_all(prompt, "{{stress}}", fixed2(agent.stress));
  replace_all(prompt, "{{energy}}", fixed2(agent.energy));
  replace_all(prompt, "{{window}}", window);
  replace_all(prompt, "{{interactions}}", std::to_string(total));
  replace_all(prompt, "{{degree}}", std::to_string(degree));
  return prompt;
}

std::optional<std::string> extract_first_json_object(std::string_view text) {
  for (auto start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        auto candidate = text.substr(start, i - start + 1);
        if (json::accept(candidate)) return std::string(candidate);
        break;
      }
    }
  }
  return std::nullopt;
}

Diagnosis parse_response(std::string_view text) {
  const auto whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && !whole.is_object()) violation("top-level value is not a JSON object", text);
  auto object_text = extract_first_json_object(text);
  if (!object_text) violation("no JSON object found", text);
  const json obj = json::parse(*object_text);

  Diagnosis d;
  if (obj.contains("agent_id")) {
    const auto &id = obj.at("agent_id");
    if (!id.is_number_integer() || id.get<long long>() < 0) violation("field 'agent_id' is not a non-negative integer", text);
    d.agent_id = id.get<int>();
  }
  d.risk_loneliness = unit_number(obj, "risk_loneliness", text);
  label_field(obj, "risk_label", text);
  d.risk_label = risk_label_for(d.risk_loneliness);
  d.risk_frailty_label = label_field(obj, "risk_frailty_label", text);

  if (!obj.contains("primary_driver")) violation("missing field 'primary_driver'", text);
  const auto &driver = obj.at("primary_driver");
  if (!driver.is_string() || driver.get<std::string>().empty())
    violation("field 'primary_driver' must be a non-empty string", text);
  d.primary_driver = driver.get<std::string>();

  d.priority_social = unit_number(obj, "priority_social", text);
  d.priority_visit = unit_number(obj, "priority_visit", text);
  return d;
}

Diagnosis heuristic_diagnose(const AgentState &agent, int degree) {
  const double l = agent.loneliness;
  const double f = agent.frailty;
  const double s = agent.stress;
  const double isolation = std::max(0.0, 1.0 - static_cast<double>(degree) / 6.0);

  Diagnosis d;
  d.agent_id = agent.id;
  d.risk_loneliness = clip01(0.5 * l + 0.3 * f + 0.2 * s);
  d.risk_label = risk_label_for(d.risk_loneliness);
  d.risk_frailty_label = risk_label_for(f);
  d.priority_social = clip01(0.6 * l + 0.4 * isolation);
  d.priority_visit = clip01(0.5 * l + 0.5 * f);

  // ties go to the earlier entry
  std::size_t driver = 0;
  if (f > l) driver = 1;
  if (s > std::max(l, f)) driver = 2;
  d.primary_driver = kDriverTable[driver];
  return d;
}

LlmDiagnosisOutcome llm_diagnose(const AgentState &agent, std::span<const int> history, int degree,
                                 const BackendConfig &config, LlmTransport &transport) {
  const std::string prompt = build_prompt(agent, history, degree);
  LlmDiagnosisOutcome out;
  int transport_failures = 0;
  std::string last_transport_error;

  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ++out.calls;
      std::string raw = transport.complete(prompt);
      out.last_call_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      out.raw_responses.push_back(raw);
      Diagnosis d = parse_response(raw);
      d.agent_id = agent.id;
      out.diagnosis = std::move(d);
      out.violation.reset();
      return out;
    } catch (const SchemaViolation &e) {
      out.violation = e.what();
    } catch (const TransportError &e) {
      ++transport_failures;
      last_transport_error = e.what();
    }
  }

  if (config.fallback == FallbackPolicy::UseHeuristic) {
    out.diagnosis = heuristic_diagnose(agent, degree);
    out.used_fallback = true;
    return out;
  }
  if (transport_failures == out.calls)
    throw BackendUnavailable("model backend unavailable after " + std::to_string(out.calls) +
                             " attempts: " + last_transport_error);
  return out;  // SkipAgent: agent omitted from the diagnosed set
}

MacroStats aggregate(std::span<const Diagnosis> diagnoses, int population_size, int day) {
  if (population_size < 1) throw InvalidConfiguration("population_size must be >= 1");
  MacroStats s;
  s.day = day;
  s.n_diagnosed = static_cast<int>(diagnoses.size());
  if (diagnoses.empty()) return s;

  int high = 0;
  double social = 0.0;
  double visit = 0.0;
  for (const auto &d : diagnoses) {
    if (d.risk_loneliness > kHighRiskThreshold) ++high;
    social += d.priority_social;
    visit += d.priority_visit;
  }
  const double n = static_cast<double>(diagnoses.size());
  s.r = static_cast<double>(high) / static_cast<double>(population_size);
  s.p_s = social / n;
  s.p_v = visit / n;
  return s;
}

DiagnosisEngine::DiagnosisEngine(BackendConfig config, std::shared_ptr<LlmTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
  if (config_.kind == BackendKind::LLM && !transport_)
    transport_ = std::make_shared<OllamaTransport>(config_.endpoint_url, config_.model_name, config_.temperature,
                                                   config_.timeout_ms);
}

CycleReport DiagnosisEngine::run_cycle(const World &world) const {
  CycleReport report;
  std::vector<Diagnosis> diagnoses;
  const auto ids = select_diagnosable(world, config_.diagnose_all);
  diagnoses.reserve(ids.size());

  if (config_.kind == BackendKind::LLM) report.prompt_hash = prompt_template_hash();

  for (int id : ids) {
    const auto &agent = world.agents[id];
    const int degree = world.network.degree(id);
    if (config_.kind == BackendKind::Heuristic) {
      diagnoses.push_back(heuristic_diagnose(agent, degree));
      continue;
    }
    const auto history = world.interaction_history(id);
    auto outcome = llm_diagnose(agent, history, degree, config_, *transport_);
    report.llm_calls += outcome.calls;
    report.call_ms.push_back(outcome.last_call_ms);
    if (config_.store_raw_responses)
      for (auto &raw : outcome.raw_responses) report.raw_responses.push_back(std::move(raw));
    if (outcome.diagnosis) diagnoses.push_back(std::move(*outcome.diagnosis));
    else ++report.skipped_agents;
  }

  report.stats = aggregate(diagnoses, static_cast<int>(world.size()), world.day);
  return report;
}

}  // namespace carelab
