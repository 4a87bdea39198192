#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "carelab/condition.hpp"
#include "carelab/control.hpp"
#include "carelab/diagnosis.hpp"

namespace carelab {

/// Provenance of one diagnosis + control cycle.
struct AuditRecord {
  int day = 0;
  Condition condition = Condition::ClosedLoop;
  MacroStats macro_stats;
  PolicyParams prior_params;
  ControlDecision decision;
  BackendKind backend_kind = BackendKind::Heuristic;
  std::string prompt_hash;  // empty unless the model was queried
  std::vector<std::string> raw_responses;
  std::string config_hash;

  bool operator==(const AuditRecord &) const = default;
};

nlohmann::json to_json(const PolicyParams &p);
/// Throws IntegrityError when a value is outside its lever range.
PolicyParams policy_params_from_json(const nlohmann::json &j);

nlohmann::json to_json(const ControlDecision &d);
ControlDecision control_decision_from_json(const nlohmann::json &j);

nlohmann::json to_json(const AuditRecord &r);
AuditRecord audit_record_from_json(const nlohmann::json &j);

/// Digest over the control and dynamics configuration of a run.
std::string config_hash(const ControlConfig &control, const nlohmann::json &dynamics);

/// Append-only, newline-delimited JSON log for one run.
class AuditLog {
 public:
  AuditLog() = default;

  /// Mirror every subsequent append to `path` (truncated first), flushed per record.
  void attach_file(const std::filesystem::path &path);

  /// Throws IntegrityError when the day does not increase or the record's
  /// prior params differ from the previous record's new params.
  void append(AuditRecord record);

  const std::vector<AuditRecord> &records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::string serialize() const;
  static AuditLog parse(std::string_view ndjson);
  static AuditLog read(const std::filesystem::path &path);
  void write(const std::filesystem::path &path) const;

 private:
  std::vector<AuditRecord> records_;
  std::shared_ptr<std::ofstream> sink_;
};

std::string serialize_line(const AuditRecord &r);

struct ReplayMismatch {
  std::size_t index = 0;
  int day = 0;
  std::string field;
  std::string recorded;
  std::string recomputed;
};

struct ReplayVerdict {
  bool replayable = true;
  std::vector<ReplayMismatch> mismatches;
  std::string note;
  std::vector<std::string> raw_proposals;

  bool verified() const { return replayable && mismatches.empty(); }
};

/// Recompute every recorded control decision from its macro stats and prior
/// params. Black-box logs come back "not replayable" with their proposals.
ReplayVerdict replay_verify(const AuditLog &log, const ControlConfig &config = {});

}  // namespace carelab
