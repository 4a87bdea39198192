#include "carelab/audit.hpp"

#include <sstream>

#include "carelab/digest.hpp"
#include "carelab/errors.hpp"

namespace carelab {

using nlohmann::json;

namespace {

double lever(const json &j, const char *key, const Interval &range) {
  const double v = j.at(key).get<double>();
  if (!range.contains(v)) throw IntegrityError(std::string("audit value '") + key + "' outside its range");
  return v;
}

std::string num(double v) { return json(v).dump(); }

void compare(ReplayVerdict &verdict, std::size_t index, int day, const char *field, double recorded,
             double recomputed) {
  if (recorded != recomputed) verdict.mismatches.push_back({index, day, field, num(recorded), num(recomputed)});
}

std::string rule_ids(const ControlDecision &d) {
  std::string out;
  for (const auto &r : d.fired_rules) {
    if (!out.empty()) out += ",";
    out += r.rule;
  }
  return out;
}

void compare_decisions(ReplayVerdict &verdict, std::size_t index, int day, const ControlDecision &recorded,
                       const ControlDecision &recomputed) {
  compare(verdict, index, day, "delta_theta_s", recorded.delta_theta_s, recomputed.delta_theta_s);
  compare(verdict, index, day, "delta_theta_t", recorded.delta_theta_t, recomputed.delta_theta_t);
  compare(verdict, index, day, "delta_theta_p", recorded.delta_theta_p, recomputed.delta_theta_p);
  compare(verdict, index, day, "new_params.theta_s", recorded.new_params.theta_s(), recomputed.new_params.theta_s());
  compare(verdict, index, day, "new_params.theta_t", recorded.new_params.theta_t(), recomputed.new_params.theta_t());
  compare(verdict, index, day, "new_params.theta_p", recorded.new_params.theta_p(), recomputed.new_params.theta_p());
  if (recorded.fired_rules != recomputed.fired_rules)
    verdict.mismatches.push_back({index, day, "fired_rules", rule_ids(recorded), rule_ids(recomputed)});
}

}  // namespace

json to_json(const PolicyParams &p) {
  return {{"theta_s", p.theta_s()}, {"theta_t", p.theta_t()}, {"theta_p", p.theta_p()}};
}

PolicyParams policy_params_from_json(const json &j) {
  return {lever(j, "theta_s", kSocialIntensityRange), lever(j, "theta_t", kVisitThresholdRange),
          lever(j, "theta_p", kVisitProbabilityRange)};
}

json to_json(const ControlDecision &d) {
  json rules = json::array();
  for (const auto &r : d.fired_rules) rules.push_back({{"rule", r.rule}, {"evidence", r.evidence}});
  return {
      {"delta_theta_s", d.delta_theta_s},
      {"delta_theta_t", d.delta_theta_t},
      {"delta_theta_p", d.delta_theta_p},
      {"fired_rules", rules},
      {"new_params", to_json(d.new_params)},
      {"violation", d.violation ? json(*d.violation) : json(nullptr)},
      {"raw_responses", d.raw_responses},
  };
}

ControlDecision control_decision_from_json(const json &j) {
  ControlDecision d;
  d.delta_theta_s = j.at("delta_theta_s").get<double>();
  d.delta_theta_t = j.at("delta_theta_t").get<double>();
  d.delta_theta_p = j.at("delta_theta_p").get<double>();
  for (const auto &r : j.at("fired_rules"))
    d.fired_rules.push_back({r.at("rule").get<std::string>(), r.at("evidence").get<std::string>()});
  d.new_params = policy_params_from_json(j.at("new_params"));
  if (!j.at("violation").is_null()) d.violation = j.at("violation").get<std::string>();
  d.raw_responses = j.at("raw_responses").get<std::vector<std::string>>();
  return d;
}

json to_json(const AuditRecord &r) {
  return {
      {"day", r.day},
      {"condition", to_string(r.condition)},
      {"macro_stats", to_json(r.macro_stats)},
      {"prior_params", to_json(r.prior_params)},
      {"decision", to_json(r.decision)},
      {"backend_kind", to_string(r.backend_kind)},
      {"prompt_hash", r.prompt_hash.empty() ? json(nullptr) : json(r.prompt_hash)},
      {"raw_responses", r.raw_responses},
      {"config_hash", r.config_hash},
  };
}

AuditRecord audit_record_from_json(const json &j) {
  AuditRecord r;
  r.day = j.at("day").get<int>();
  r.condition = parse_condition(j.at("condition").get<std::string>());
  r.macro_stats = macro_stats_from_json(j.at("macro_stats"));
  r.prior_params = policy_params_from_json(j.at("prior_params"));
  r.decision = control_decision_from_json(j.at("decision"));
  r.backend_kind = parse_backend_kind(j.at("backend_kind").get<std::string>());
  if (!j.at("prompt_hash").is_null()) r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.raw_responses = j.at("raw_responses").get<std::vector<std::string>>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

std::string config_hash(const ControlConfig &control, const json &dynamics) {
  const json material = {{"control", to_json(control)}, {"dynamics", dynamics}};
  return sha256_hex(material.dump());
}

std::string serialize_line(const AuditRecord &r) { return to_json(r).dump(); }

void AuditLog::attach_file(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = std::make_shared<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*out) throw std::runtime_error("cannot open audit file " + path.string());
  for (const auto &r : records_) *out << serialize_line(r) << '\n';
  out->flush();
  sink_ = std::move(out);
}

void AuditLog::append(AuditRecord record) {
  if (!records_.empty()) {
    const auto &last = records_.back();
    if (record.day <= last.day)
      throw IntegrityError("audit day " + std::to_string(record.day) + " does not follow day " +
                           std::to_string(last.day));
    if (!(record.prior_params == last.decision.new_params))
      throw IntegrityError("audit chain break at day " + std::to_string(record.day) +
                           ": prior params differ from the previous decision");
  }
  if (sink_) {
    *sink_ << serialize_line(record) << '\n';
    sink_->flush();
  }
  records_.push_back(std::move(record));
}

std::string AuditLog::serialize() const {
  std::string out;
  for (const auto &r : records_) {
    out += serialize_line(r);
    out += '\n';
  }
  return out;
}

AuditLog AuditLog::parse(std::string_view ndjson) {
  AuditLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < ndjson.size()) {
    auto end = ndjson.find('\n', pos);
    if (end == std::string_view::npos) end = ndjson.size();
    const auto line = ndjson.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      log.append(audit_record_from_json(json::parse(line)));
    } catch (const json::exception &e) {
      throw IntegrityError("audit line " + std::to_string(line_no) + " is malformed: " + e.what());
    } catch (const InvalidConfiguration &e) {
      throw IntegrityError("audit line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

AuditLog AuditLog::read(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read audit file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void AuditLog::write(const std::filesystem::path &path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write audit file " + path.string());
  out << serialize();
}

ReplayVerdict replay_verify(const AuditLog &log, const ControlConfig &config) {
  ReplayVerdict verdict;
  const auto &records = log.records();

  for (const auto &r : records) {
    if (r.condition == Condition::BlackBox) {
      verdict.replayable = false;
      verdict.note = "not replayable: black-box proposals are not a function of recorded inputs; raw proposals attached";
      for (const auto &rec : records)
        for (const auto &raw : rec.decision.raw_responses) verdict.raw_proposals.push_back(raw);
      return verdict;
    }
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto &r = records[i];
    switch (r.condition) {
      case Condition::ClosedLoop:
        compare_decisions(verdict, i, r.day, r.decision, closed_loop_update(r.macro_stats, r.prior_params, config));
        break;
      case Condition::LLMMapping:
        compare_decisions(verdict, i, r.day, r.decision, llm_mapping_decision(r.macro_stats, r.prior_params));
        break;
      default:
        verdict.mismatches.push_back({i, r.day, "condition", std::string(to_string(r.condition)), "no control layer"});
        break;
    }
  }
  verdict.note = verdict.mismatches.empty()
                     ? "verified: " + std::to_string(records.size()) + " decisions recomputed"
                     : std::to_string(verdict.mismatches.size()) + " mismatch(es)";
  return verdict;
}

}  // namespace carelab
