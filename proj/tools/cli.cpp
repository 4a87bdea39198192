#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>

#include "carelab/errors.hpp"
#include "carelab/experiments.hpp"

namespace carelab::cli {

namespace fs = std::filesystem;

namespace {

/// Flags that mirror config-file keys. Unset flags leave the file value alone.
struct Overrides {
  std::optional<double> risk_threshold, priority_threshold, update_cap, theta_t_step, theta_p_step, social_gain;
  std::optional<std::string> backend, endpoint, model, fallback;
  std::optional<double> temperature;
  std::optional<int> timeout_ms, max_retries;
  bool diagnose_all = false;
  bool no_raw_responses = false;
  std::optional<int> agents, days;
  std::optional<std::vector<std::uint64_t>> seeds;

  void apply(ExperimentConfig &c) const {
    if (risk_threshold) c.control.risk_threshold = *risk_threshold;
    if (priority_threshold) c.control.priority_threshold = *priority_threshold;
    if (update_cap) c.control.update_cap = *update_cap;
    if (theta_t_step) c.control.theta_t_step = *theta_t_step;
    if (theta_p_step) c.control.theta_p_step = *theta_p_step;
    if (social_gain) c.control.social_gain = *social_gain;
    if (backend) c.backend.kind = parse_backend_kind(*backend);
    if (endpoint) c.backend.endpoint_url = *endpoint;
    if (model) c.backend.model_name = *model;
    if (fallback) c.backend.fallback = parse_fallback_policy(*fallback);
    if (temperature) c.backend.temperature = *temperature;
    if (timeout_ms) c.backend.timeout_ms = *timeout_ms;
    if (max_retries) c.backend.max_retries = *max_retries;
    if (diagnose_all) c.backend.diagnose_all = true;
    if (no_raw_responses) c.backend.store_raw_responses = false;
    if (agents) c.n_agents = *agents;
    if (days) c.days = *days;
    if (seeds) c.seeds = *seeds;
  }
};

struct Common {
  std::string config_path;
  std::string output_dir = "out";
  Overrides overrides;
  int jobs = 0;
};

void add_common(CLI::App &sub, Common &c) {
  sub.add_option("-c,--config", c.config_path, "JSON or TOML config file (flags override it)")->check(CLI::ExistingFile);
  sub.add_option("-o,--output-dir", c.output_dir, "Directory for all output files")->capture_default_str();

  auto &o = c.overrides;
  const char *control = "Control";
  sub.add_option("--risk-threshold", o.risk_threshold, "control.risk_threshold (default 0.40)")->group(control);
  sub.add_option("--priority-threshold", o.priority_threshold, "control.priority_threshold (default 0.75)")->group(control);
  sub.add_option("--update-cap", o.update_cap, "control.update_cap (default 0.05)")->group(control);
  sub.add_option("--theta-t-step", o.theta_t_step, "control.theta_t_step (default 0.02)")->group(control);
  sub.add_option("--theta-p-step", o.theta_p_step, "control.theta_p_step (default 0.05)")->group(control);
  sub.add_option("--social-gain", o.social_gain, "control.social_gain (default 0.1)")->group(control);

  const char *backend = "Backend";
  sub.add_option("--backend", o.backend, "backend.kind: heuristic | llm")->group(backend);
  sub.add_option("--endpoint", o.endpoint, "backend.endpoint_url")->group(backend);
  sub.add_option("--model", o.model, "backend.model_name")->group(backend);
  sub.add_option("--temperature", o.temperature, "backend.temperature")->group(backend);
  sub.add_option("--timeout-ms", o.timeout_ms, "backend.timeout_ms")->group(backend);
  sub.add_option("--max-retries", o.max_retries, "backend.max_retries")->group(backend);
  sub.add_option("--fallback", o.fallback, "backend.fallback: skip-agent | use-heuristic")->group(backend);
  sub.add_flag("--diagnose-all", o.diagnose_all, "backend.diagnose_all = true")->group(backend);
  sub.add_flag("--no-raw-responses", o.no_raw_responses, "backend.store_raw_responses = false")->group(backend);

  const char *experiment = "Experiment";
  sub.add_option("--agents", o.agents, "experiment.n_agents (default 30)")->group(experiment);
  sub.add_option("--days", o.days, "experiment.days (default 200)")->group(experiment);
}

void add_seeds(CLI::App &sub, Common &c, const char *help) {
  sub.add_option("--seeds", c.overrides.seeds, help)->delimiter(',')->group("Experiment");
}

void add_jobs(CLI::App &sub, Common &c) {
  sub.add_option("-j,--jobs", c.jobs, "Parallel runs (0 = hardware concurrency)");
}

ExperimentConfig resolve(const Common &c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  c.overrides.apply(cfg);
  cfg.validate();
  return cfg;
}

std::vector<Condition> parse_conditions(const std::vector<std::string> &names) {
  if (names.empty()) return {kAllConditions.begin(), kAllConditions.end()};
  std::vector<Condition> out;
  for (const auto &n : names) out.push_back(parse_condition(n));
  return out;
}

std::string sd_text(const std::optional<double> &sd) {
  if (!sd) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << *sd;
  return s.str();
}

void print_summary(std::ostream &out, const std::vector<ConditionSummary> &summary) {
  out << std::left << std::setw(14) << "condition" << std::right << std::setw(4) << "n" << std::setw(8) << "mean"
      << std::setw(8) << "sd" << '\n';
  for (const auto &s : summary)
    out << std::left << std::setw(14) << to_string(s.condition) << std::right << std::setw(4) << s.n
        << std::setw(8) << std::fixed << std::setprecision(3) << s.mean << std::setw(8) << sd_text(s.sd) << '\n';
}

void print_pairwise(std::ostream &out, const std::vector<NamedComparison> &rows) {
  for (const auto &r : rows)
    out << std::left << std::setw(30) << (std::string(to_string(r.a)) + " vs " + std::string(to_string(r.b)))
        << std::right << std::fixed << std::setprecision(3) << " diff " << std::showpos << r.result.mean_diff
        << std::noshowpos << std::setprecision(1) << "  improve " << r.result.improvement_pct << "%"
        << std::setprecision(2) << "  d " << r.result.cohens_d << std::setprecision(4) << "  p "
        << r.result.p_value << '\n';
}

int run_cmd(const Common &c, const std::string &condition_name, std::uint64_t seed, std::ostream &out,
            std::ostream &err) {
  const auto cfg = resolve(c);
  const Condition condition = parse_condition(condition_name);
  RunOptions opts;
  opts.audit_dir = fs::path(c.output_dir) / "audit";
  const auto result = run_condition(condition, seed, cfg, opts);
  const auto traj = fs::path(c.output_dir) / ("trajectory_" + std::string(to_string(condition)) + "_seed" +
                                              std::to_string(seed) + ".csv");
  write_trajectory_csv(result, traj);
  if (result.aborted) {
    err << "run aborted: " << result.error << '\n' << "partial audit: " << result.audit_path << '\n';
    return kBackendUnavailable;
  }
  out << "final_mean_loneliness " << format_number(result.final_mean_loneliness) << '\n';
  out << "audit " << result.audit_path << '\n';
  out << "trajectory " << traj.string() << '\n';
  return kOk;
}

int suite_cmd(const Common &c, const std::vector<std::string> &condition_names, bool welch, std::ostream &out,
              std::ostream &err) {
  const auto cfg = resolve(c);
  const auto conditions = parse_conditions(condition_names);
  RunOptions opts;
  opts.audit_dir = fs::path(c.output_dir) / "audit";
  const auto variant = welch ? stats::TTestVariant::Welch : stats::TTestVariant::Student;
  const auto suite = run_suite(conditions, cfg.seeds, cfg, opts, c.jobs, variant);

  const fs::path dir(c.output_dir);
  write_results_csv(suite.runs, dir / "results.csv");
  write_summary_json(suite.summary, cfg.seeds, dir / "summary.json");
  write_pairwise_json(suite.pairwise, dir / "pairwise.json");

  print_summary(out, suite.summary);
  print_pairwise(out, suite.pairwise);
  out << "wrote " << (dir / "results.csv").string() << ", summary.json, pairwise.json\n";

  const auto aborted = suite.aborted();
  for (const auto *r : aborted)
    err << "aborted: " << to_string(r->condition) << " seed " << r->seed << ": " << r->error << '\n';
  return aborted.empty() ? kOk : kBackendUnavailable;
}

int sensitivity_cmd(const Common &c, std::ostream &out) {
  auto cfg = resolve(c);
  if (!c.overrides.seeds) cfg.seeds = {300, 400};
  const auto rows = sensitivity_sweep(cfg, cfg.seeds, {}, c.jobs);
  const auto path = fs::path(c.output_dir) / "sensitivity.csv";
  write_sensitivity_csv(rows, path);
  out << std::left << std::setw(20) << "parameter" << std::setw(8) << "value" << std::right << std::setw(8) << "mean"
      << std::setw(8) << "sd" << std::setw(8) << "min" << std::setw(8) << "max" << std::setw(9) << "delta%" << '\n';
  for (const auto &r : rows)
    out << std::left << std::setw(20) << r.parameter << std::setw(8) << (r.value.empty() ? "--" : r.value)
        << std::right << std::fixed << std::setprecision(3) << std::setw(8) << r.mean << std::setw(8)
        << sd_text(r.sd) << std::setw(8) << r.min << std::setw(8) << r.max << std::setw(8) << std::showpos
        << std::setprecision(1) << r.delta_pct << std::noshowpos << "%\n";
  out << "wrote " << path.string() << '\n';
  return kOk;
}

int stats_cmd(const Common &c, const std::string &results_path, bool welch, std::ostream &out) {
  const fs::path dir(c.output_dir);
  const fs::path input = results_path.empty() ? dir / "results.csv" : fs::path(results_path);
  const auto runs = read_results_csv(input);
  std::vector<Condition> present;
  std::vector<std::uint64_t> seeds;
  for (const auto &r : runs) {
    if (std::find(present.begin(), present.end(), r.condition) == present.end()) present.push_back(r.condition);
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
  }
  const auto summary = summarize(runs, present);
  const auto pairwise = pairwise_table(runs, welch ? stats::TTestVariant::Welch : stats::TTestVariant::Student);
  write_summary_json(summary, seeds, dir / "summary.json");
  write_pairwise_json(pairwise, dir / "pairwise.json");
  print_summary(out, summary);
  print_pairwise(out, pairwise);
  return kOk;
}

int verify_cmd(const Common &c, const std::vector<std::string> &files, std::ostream &out, std::ostream &err) {
  const auto cfg = resolve(c);
  int status = kOk;
  for (const auto &file : files) {
    AuditLog log;
    try {
      log = AuditLog::read(file);
    } catch (const IntegrityError &e) {
      err << file << ": integrity error: " << e.what() << '\n';
      status = kVerificationFailed;
      continue;
    }
    const auto verdict = replay_verify(log, cfg.control);
    if (!verdict.replayable) {
      out << file << ": " << verdict.note << " (" << verdict.raw_proposals.size() << " proposals)\n";
      continue;
    }
    if (verdict.mismatches.empty()) {
      out << file << ": " << verdict.note << '\n';
      continue;
    }
    status = kVerificationFailed;
    for (const auto &m : verdict.mismatches)
      err << file << ": mismatch at day " << m.day << " (record " << m.index << ") " << m.field << ": recorded "
          << m.recorded << ", recomputed " << m.recomputed << '\n';
  }
  return status;
}

int export_cmd(const Common &c, const std::vector<std::string> &condition_names, std::ostream &out) {
  const auto cfg = resolve(c);
  const auto conditions = parse_conditions(condition_names);
  const auto suite = run_suite(conditions, cfg.seeds, cfg, {}, c.jobs);
  for (const auto &run : suite.runs) {
    const auto path = fs::path(c.output_dir) / "trajectories" /
                      (std::string(to_string(run.condition)) + "_seed" + std::to_string(run.seed) + ".csv");
    write_trajectory_csv(run, path);
    out << path.string() << '\n';
  }
  return suite.aborted().empty() ? kOk : kBackendUnavailable;
}

}  // namespace

int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"carelab: closed-loop policy adaptation in an elderly-care agent-based simulation"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;

  auto *run = app.add_subcommand("run", "Simulate one condition for one seed");
  std::string condition = "closed-loop";
  std::uint64_t seed = 300;
  run->add_option("--condition", condition,
                  "baseline | fixed-policy | llm-mapping | closed-loop | black-box")->capture_default_str();
  run->add_option("--seed", seed, "Random seed")->capture_default_str();
  add_common(*run, common);

  auto *suite = app.add_subcommand("suite", "All conditions x seeds; writes results.csv, summary.json, pairwise.json");
  std::vector<std::string> conditions;
  bool welch = false;
  suite->add_option("--conditions", conditions, "Subset of conditions (default: all five)")->delimiter(',');
  suite->add_flag("--welch", welch, "Welch's t-test instead of Student's pooled-variance test");
  add_common(*suite, common);
  add_seeds(*suite, common, "Seeds (default: holdout 300,400,500,600)");
  add_jobs(*suite, common);

  auto *sens = app.add_subcommand("sensitivity", "One-factor-at-a-time controller sweep; writes sensitivity.csv");
  add_common(*sens, common);
  add_seeds(*sens, common, "Seeds (default: 300,400)");
  add_jobs(*sens, common);

  auto *st = app.add_subcommand("stats", "Summary and pairwise statistics from an existing results.csv");
  std::string results_path;
  st->add_option("--results", results_path, "results.csv (default: <output-dir>/results.csv)");
  st->add_flag("--welch", welch, "Welch's t-test instead of Student's pooled-variance test");
  st->add_option("-o,--output-dir", common.output_dir, "Directory for summary.json and pairwise.json")
      ->capture_default_str();

  auto *verify = app.add_subcommand("verify", "Replay audit logs; exit 2 on any mismatch");
  std::vector<std::string> files;
  verify->add_option("audit_files", files, "Audit .ndjson files")->required()->check(CLI::ExistingFile);
  verify->add_option("-c,--config", common.config_path, "Config whose control section to replay with")
      ->check(CLI::ExistingFile);
  {
    auto &o = common.overrides;
    verify->add_option("--risk-threshold", o.risk_threshold);
    verify->add_option("--priority-threshold", o.priority_threshold);
    verify->add_option("--update-cap", o.update_cap);
    verify->add_option("--theta-t-step", o.theta_t_step);
    verify->add_option("--theta-p-step", o.theta_p_step);
    verify->add_option("--social-gain", o.social_gain);
  }

  auto *exp = app.add_subcommand("export", "Per-day trajectory CSVs for plotting");
  exp->add_option("--conditions", conditions, "Subset of conditions (default: all five)")->delimiter(',');
  add_common(*exp, common);
  add_seeds(*exp, common, "Seeds (default: holdout 300,400,500,600)");
  add_jobs(*exp, common);

  std::vector<const char *> argv{"carelab"};
  for (const auto &a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_cmd(common, condition, seed, out, err);
    if (*suite) return suite_cmd(common, conditions, welch, out, err);
    if (*sens) return sensitivity_cmd(common, out);
    if (*st) return stats_cmd(common, results_path, welch, out);
    if (*verify) return verify_cmd(common, files, out, err);
    if (*exp) return export_cmd(common, conditions, out);
  } catch (const BackendUnavailable &e) {
    err << "backend unavailable: " << e.what() << '\n';
    return kBackendUnavailable;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace carelab::cli
