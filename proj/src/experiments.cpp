#include "carelab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "carelab/errors.hpp"

namespace carelab {

using nlohmann::json;

namespace {

int high_risk_count(const World &world) {
  return static_cast<int>(std::count_if(world.agents.begin(), world.agents.end(),
                                        [](const AgentState &a) { return a.loneliness > kHighRiskThreshold; }));
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn &&fn) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ConditionSummary summarize_values(Condition c, const std::vector<double> &xs) {
  ConditionSummary s;
  s.condition = c;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  s.mean = stats::mean(xs);
  if (xs.size() >= 2) s.sd = stats::sample_sd(xs);
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

json optional_number(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunResult run_condition(Condition condition, std::uint64_t seed, const ExperimentConfig &cfg,
                        const RunOptions &options) {
  cfg.validate();
  RunResult result;
  result.seed = seed;
  result.condition = condition;

  World world = init_world(seed, cfg.n_agents, cfg.dynamics);
  PolicyParams params;
  const std::optional<PolicyParams> no_interventions;

  std::shared_ptr<LlmTransport> transport;
  if (uses_diagnosis(condition) && cfg.backend.kind == BackendKind::LLM)
    transport = options.transport_factory
                    ? options.transport_factory()
                    : std::make_shared<OllamaTransport>(cfg.backend.endpoint_url, cfg.backend.model_name,
                                                        cfg.backend.temperature, cfg.backend.timeout_ms);
  std::optional<DiagnosisEngine> engine;
  if (uses_diagnosis(condition)) engine.emplace(cfg.backend, transport);
  std::shared_ptr<LlmTransport> proposer = transport;
  if (condition == Condition::BlackBox && !proposer) proposer = std::make_shared<HeuristicProposer>();

  if (options.audit_dir) {
    const auto path = *options.audit_dir / (std::string(to_string(condition)) + "_seed" + std::to_string(seed) + ".ndjson");
    result.audit.attach_file(path);
    result.audit_path = path.string();
  }
  const std::string cfg_hash = config_hash(cfg.control, to_json(cfg.dynamics));

  auto record_day = [&] {
    result.daily_means.push_back(mean_loneliness(world));
    result.param_history.push_back(params);
    result.daily_visits.push_back(world.visits_today);
    result.high_risk_counts.push_back(high_risk_count(world));
  };
  record_day();

  try {
    for (int d = 1; d <= cfg.days; ++d) {
      step_day(world, uses_interventions(condition) ? std::optional<PolicyParams>(params) : no_interventions);

      if (world.day % cfg.diagnosis_period == 0) {
        update_network(world);
        if (engine) {
          CycleReport report = engine->run_cycle(world);
          result.llm_call_count += report.llm_calls;

          AuditRecord rec;
          rec.day = world.day;
          rec.condition = condition;
          rec.macro_stats = report.stats;
          rec.prior_params = params;
          rec.backend_kind = cfg.backend.kind;
          rec.prompt_hash = report.prompt_hash;
          rec.raw_responses = std::move(report.raw_responses);
          rec.config_hash = cfg_hash;

          switch (condition) {
            case Condition::ClosedLoop:
              rec.decision = closed_loop_update(report.stats, params, cfg.control);
              break;
            case Condition::LLMMapping:
              rec.decision = llm_mapping_decision(report.stats, params);
              break;
            case Condition::BlackBox:
              rec.decision = black_box_update(report.stats, params, cfg.backend, *proposer);
              if (cfg.backend.kind == BackendKind::LLM)
                result.llm_call_count += static_cast<int>(std::max<std::size_t>(1, rec.decision.raw_responses.size()));
              if (!cfg.backend.store_raw_responses) rec.decision.raw_responses.clear();
              break;
            default:
              break;
          }
          params = rec.decision.new_params;
          result.audit.append(std::move(rec));
        }
      }
      record_day();
    }
  } catch (const BackendUnavailable &e) {
    result.aborted = true;
    result.error = e.what();
  }

  result.visit_count = world.total_visits;
  result.final_mean_loneliness = result.daily_means.back();
  return result;
}

std::vector<const RunResult *> SuiteResult::aborted() const {
  std::vector<const RunResult *> out;
  for (const auto &r : runs)
    if (r.aborted) out.push_back(&r);
  return out;
}

std::vector<double> finals_for(const std::vector<RunResult> &runs, Condition condition) {
  std::vector<double> out;
  for (const auto &r : runs)
    if (r.condition == condition && !r.aborted) out.push_back(r.final_mean_loneliness);
  return out;
}

std::vector<ConditionSummary> summarize(const std::vector<RunResult> &runs, const std::vector<Condition> &conditions) {
  std::vector<ConditionSummary> out;
  for (auto c : conditions) out.push_back(summarize_values(c, finals_for(runs, c)));
  return out;
}

std::vector<NamedComparison> pairwise_table(const std::vector<RunResult> &runs, stats::TTestVariant variant) {
  static constexpr std::pair<Condition, Condition> kRows[] = {
      {Condition::ClosedLoop, Condition::LLMMapping}, {Condition::ClosedLoop, Condition::BlackBox},
      {Condition::ClosedLoop, Condition::FixedPolicy}, {Condition::BlackBox, Condition::FixedPolicy},
      {Condition::LLMMapping, Condition::FixedPolicy}, {Condition::ClosedLoop, Condition::Baseline},
  };
  std::vector<NamedComparison> out;
  for (const auto &[a, b] : kRows) {
    const auto xa = finals_for(runs, a);
    const auto xb = finals_for(runs, b);
    if (xa.size() < 2 || xb.size() < 2) continue;
    out.push_back({a, b, stats::compare(xa, xb, variant)});
  }
  return out;
}

SuiteResult run_suite(const std::vector<Condition> &conditions, const std::vector<std::uint64_t> &seeds,
                      const ExperimentConfig &cfg, const RunOptions &options, int jobs, stats::TTestVariant variant) {
  if (seeds.empty()) throw InvalidConfiguration("suite needs at least one seed");
  cfg.validate();

  std::vector<std::pair<Condition, std::uint64_t>> grid;
  for (auto c : conditions)
    for (auto s : seeds) grid.emplace_back(c, s);

  SuiteResult suite;
  suite.runs.resize(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    suite.runs[i] = run_condition(grid[i].first, grid[i].second, cfg, options);
  });
  suite.summary = summarize(suite.runs, conditions);
  suite.pairwise = pairwise_table(suite.runs, variant);
  return suite;
}

std::vector<std::pair<std::string, ControlConfig>> sensitivity_grid(const ControlConfig &base) {
  std::vector<std::pair<std::string, ControlConfig>> grid;
  grid.emplace_back("baseline", base);
  for (double v : {0.30, 0.50}) {
    auto c = base;
    c.risk_threshold = v;
    grid.emplace_back("risk_threshold", c);
  }
  for (double v : {0.65, 0.85}) {
    auto c = base;
    c.priority_threshold = v;
    grid.emplace_back("priority_threshold", c);
  }
  for (double v : {0.03, 0.08}) {
    auto c = base;
    c.update_cap = v;
    grid.emplace_back("update_cap", c);
  }
  return grid;
}

bool reproduces_decisions(const AuditLog &log, const ControlConfig &config) {
  for (const auto &r : log.records()) {
    const auto d = closed_loop_update(r.macro_stats, r.prior_params, config);
    if (d.delta_theta_s != r.decision.delta_theta_s || d.delta_theta_t != r.decision.delta_theta_t ||
        d.delta_theta_p != r.decision.delta_theta_p || !(d.new_params == r.decision.new_params))
      return false;
  }
  return true;
}

std::vector<SensitivityRow> sensitivity_sweep(const ExperimentConfig &cfg, const std::vector<std::uint64_t> &seeds,
                                              const RunOptions &options, int jobs) {
  if (seeds.empty()) throw InvalidConfiguration("sensitivity sweep needs at least one seed");
  const auto grid = sensitivity_grid(cfg.control);

  std::vector<RunResult> runs(grid.size() * seeds.size());
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    ExperimentConfig variant = cfg;
    variant.control = grid[i / seeds.size()].second;
    runs[i] = run_condition(Condition::ClosedLoop, seeds[i % seeds.size()], variant, options);
  });

  std::vector<SensitivityRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SensitivityRow row;
    row.parameter = grid[g].first;
    row.config = grid[g].second;
    if (row.parameter == "risk_threshold") row.value = format_number(row.config.risk_threshold);
    else if (row.parameter == "priority_threshold") row.value = format_number(row.config.priority_threshold);
    else if (row.parameter == "update_cap") row.value = format_number(row.config.update_cap);

    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto &run = runs[g * seeds.size() + s];
      if (run.aborted) throw BackendUnavailable("sensitivity run aborted: " + run.error);
      row.finals.push_back(run.final_mean_loneliness);
      // runs[s] is the baseline row for the same seed
      if (!reproduces_decisions(runs[s].audit, row.config)) row.same_decisions_on_baseline_stream = false;
    }
    const auto summary = summarize_values(Condition::ClosedLoop, row.finals);
    row.mean = summary.mean;
    row.sd = summary.sd;
    row.min = summary.min;
    row.max = summary.max;
    rows.push_back(std::move(row));
  }
  for (auto &row : rows) row.delta_pct = (row.mean - rows.front().mean) / rows.front().mean * 100.0;
  return rows;
}

std::string format_number(double v) { return json(v).dump(); }

void write_results_csv(const std::vector<RunResult> &runs, const std::filesystem::path &path) {
  std::ostringstream out;
  out << "condition,seed,split,final_mean_loneliness,visits,llm_calls,aborted\n";
  for (const auto &r : runs)
    out << to_string(r.condition) << ',' << r.seed << ',' << (is_train_seed(r.seed) ? "train" : "holdout") << ','
        << format_number(r.final_mean_loneliness) << ',' << r.visit_count << ',' << r.llm_call_count << ','
        << (r.aborted ? 1 : 0) << '\n';
  write_text(path, out.str());
}

void write_summary_json(const std::vector<ConditionSummary> &summary, const std::vector<std::uint64_t> &seeds,
                        const std::filesystem::path &path) {
  json rows = json::array();
  for (const auto &s : summary)
    rows.push_back({{"condition", to_string(s.condition)}, {"n", s.n}, {"mean", s.mean},
                    {"sd", optional_number(s.sd)}, {"min", s.min}, {"max", s.max}});
  const bool all_train = std::all_of(seeds.begin(), seeds.end(), is_train_seed);
  const bool any_train = std::any_of(seeds.begin(), seeds.end(), is_train_seed);
  const json doc = {{"seeds", seeds},
                    {"split", all_train ? "train" : (any_train ? "mixed" : "holdout")},
                    {"conditions", rows}};
  write_text(path, doc.dump(2) + "\n");
}

void write_pairwise_json(const std::vector<NamedComparison> &rows, const std::filesystem::path &path) {
  json doc = json::array();
  for (const auto &row : rows)
    doc.push_back({{"comparison", std::string(to_string(row.a)) + " vs " + std::string(to_string(row.b))},
                   {"a", to_string(row.a)},
                   {"b", to_string(row.b)},
                   {"mean_diff", row.result.mean_diff},
                   {"improvement_pct", row.result.improvement_pct},
                   {"cohens_d", row.result.cohens_d},
                   {"p_value", row.result.p_value},
                   {"n_per_group", row.result.n_per_group}});
  write_text(path, doc.dump(2) + "\n");
}

void write_sensitivity_csv(const std::vector<SensitivityRow> &rows, const std::filesystem::path &path) {
  std::ostringstream out;
  out << "parameter,value,mean,sd,min,max,delta_pct,same_decisions_on_baseline_stream\n";
  for (const auto &r : rows)
    out << r.parameter << ',' << r.value << ',' << format_number(r.mean) << ','
        << (r.sd ? format_number(*r.sd) : std::string()) << ',' << format_number(r.min) << ','
        << format_number(r.max) << ',' << format_number(r.delta_pct) << ','
        << (r.same_decisions_on_baseline_stream ? "true" : "false") << '\n';
  write_text(path, out.str());
}

std::string trajectory_csv(const RunResult &run) {
  std::ostringstream out;
  out << "day,mean_loneliness,theta_s,theta_t,theta_p,visits_today,high_risk_count\n";
  for (std::size_t d = 0; d < run.daily_means.size(); ++d) {
    const auto &p = run.param_history[d];
    out << d << ',' << format_number(run.daily_means[d]) << ',' << format_number(p.theta_s()) << ','
        << format_number(p.theta_t()) << ',' << format_number(p.theta_p()) << ',' << run.daily_visits[d] << ','
        << run.high_risk_counts[d] << '\n';
  }
  return out.str();
}

void write_trajectory_csv(const RunResult &run, const std::filesystem::path &path) {
  write_text(path, trajectory_csv(run));
}

std::vector<RunResult> read_results_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfiguration("cannot read results file " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<RunResult> runs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    if (cols.size() < 7) throw InvalidConfiguration("malformed results row: " + line);
    RunResult r;
    r.condition = parse_condition(cols[0]);
    r.seed = std::stoull(cols[1]);
    r.final_mean_loneliness = std::stod(cols[3]);
    r.visit_count = std::stol(cols[4]);
    r.llm_call_count = std::stoi(cols[5]);
    r.aborted = cols[6] == "1";
    runs.push_back(std::move(r));
  }
  return runs;
}

}  // namespace carelab
