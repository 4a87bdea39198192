#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "carelab/errors.hpp"
#include "carelab/experiments.hpp"
#include "stub_server.hpp"
#include "support.hpp"

using namespace carelab;

namespace {

ExperimentConfig short_config(int days = 70) {
  ExperimentConfig cfg;
  cfg.days = days;
  return cfg;
}

}  // namespace

TEST_CASE("condition names and wiring") {
  for (auto c : kAllConditions) CHECK(parse_condition(to_string(c)) == c);
  CHECK(parse_condition("closed") == Condition::ClosedLoop);
  CHECK(parse_condition("fixed") == Condition::FixedPolicy);
  CHECK_THROWS_AS(parse_condition("open-loop"), InvalidConfiguration);
  CHECK_FALSE(uses_diagnosis(Condition::Baseline));
  CHECK_FALSE(uses_diagnosis(Condition::FixedPolicy));
  CHECK(uses_diagnosis(Condition::BlackBox));
  CHECK_FALSE(uses_interventions(Condition::Baseline));
}

TEST_CASE("run result shape") {
  const auto cfg = short_config();
  const auto r = run_condition(Condition::ClosedLoop, 300, cfg);
  CHECK(r.daily_means.size() == 71);
  CHECK(r.param_history.size() == 71);
  CHECK(r.final_mean_loneliness == r.daily_means.back());
  CHECK(r.audit.size() == 10);
  CHECK(r.llm_call_count == 0);
  CHECK_FALSE(r.aborted);
  CHECK(r.visit_count == std::accumulate(r.daily_visits.begin(), r.daily_visits.end(), 0L));
}

TEST_CASE("baseline runs are deterministic and intervention-free") {
  const auto cfg = short_config();
  const auto a = run_condition(Condition::Baseline, 300, cfg);
  const auto b = run_condition(Condition::Baseline, 300, cfg);
  CHECK(a.daily_means == b.daily_means);
  CHECK(a.visit_count == 0);
  CHECK(a.audit.empty());
  CHECK(trajectory_csv(a) == trajectory_csv(b));
}

TEST_CASE("fixed policy holds its parameters") {
  const auto r = run_condition(Condition::FixedPolicy, 400, short_config());
  for (const auto &p : r.param_history) CHECK(p == PolicyParams(1.0, 0.6, 0.3));
  CHECK(r.audit.empty());
}

TEST_CASE("closed loop under persistent visit pressure converges monotonically") {
  ExperimentConfig cfg;
  cfg.days = 200;
  const auto r = run_condition(Condition::ClosedLoop, 300, cfg);
  for (std::size_t i = 1; i < r.param_history.size(); ++i) {
    REQUIRE(r.param_history[i].theta_p() >= r.param_history[i - 1].theta_p());
    REQUIRE(r.param_history[i].theta_t() <= r.param_history[i - 1].theta_t());
  }
  CHECK(r.param_history.back().theta_p() == 0.5);
  CHECK(r.param_history.back().theta_t() == 0.4);
  CHECK(replay_verify(r.audit).verified());
}

TEST_CASE("parameters take effect from the day after a cycle") {
  const auto r = run_condition(Condition::ClosedLoop, 300, short_config());
  for (const auto &rec : r.audit.records()) {
    CHECK(r.param_history[rec.day] == rec.decision.new_params);
    CHECK(r.param_history[rec.day - 1] == rec.prior_params);
  }
}

TEST_CASE("suite orders by condition then seed, and single-seed sd is absent") {
  const auto cfg = short_config(28);
  const std::vector<Condition> conds{Condition::ClosedLoop, Condition::Baseline};
  const auto suite = run_suite(conds, {500, 300}, cfg, {}, 3);
  REQUIRE(suite.runs.size() == 4);
  CHECK(suite.runs[0].condition == Condition::ClosedLoop);
  CHECK(suite.runs[0].seed == 500);
  CHECK(suite.runs[3].seed == 300);
  const auto single = run_suite(conds, {300}, cfg);
  CHECK_FALSE(single.summary[0].sd.has_value());
  CHECK(single.summary[0].n == 1);
  CHECK_THROWS_AS(run_suite(conds, {}, cfg), InvalidConfiguration);
}

TEST_CASE("suite results are independent of job count") {
  const auto cfg = short_config(35);
  const std::vector<Condition> all(kAllConditions.begin(), kAllConditions.end());
  testing::TempDir dir("jobs");
  const auto serial = run_suite(all, kHoldoutSeeds, cfg, {}, 1);
  const auto parallel = run_suite(all, kHoldoutSeeds, cfg, {}, 8);
  write_results_csv(serial.runs, dir / "a.csv");
  write_results_csv(parallel.runs, dir / "b.csv");
  CHECK(testing::read_file(dir / "a.csv") == testing::read_file(dir / "b.csv"));
  CHECK(serial.runs.size() == 20);
}

TEST_CASE("results csv round trip and train labels") {
  const auto cfg = short_config(14);
  testing::TempDir dir("csv");
  const auto suite = run_suite({Condition::Baseline, Condition::ClosedLoop}, {42, 300}, cfg);
  write_results_csv(suite.runs, dir / "results.csv");
  const auto text = testing::read_file(dir / "results.csv");
  CHECK(text.rfind("condition,seed,split,final_mean_loneliness", 0) == 0);
  CHECK(text.find("baseline,42,train,") != std::string::npos);
  CHECK(text.find("baseline,300,holdout,") != std::string::npos);
  const auto back = read_results_csv(dir / "results.csv");
  REQUIRE(back.size() == 4);
  CHECK(back[1].final_mean_loneliness == suite.runs[1].final_mean_loneliness);
}

TEST_CASE("llm-backed run aborts cleanly and keeps its partial audit") {
  int calls = 0;
  testing::StubServer server([&calls](const nlohmann::json &) {
    ++calls;
    if (calls > 40) return std::make_pair(503, std::string("{}"));
    nlohmann::json d = {{"risk_loneliness", 0.7}, {"risk_label", "High"}, {"risk_frailty_label", "Low"},
                        {"primary_driver", "Social isolation"}, {"priority_social", 0.8}, {"priority_visit", 0.9}};
    return std::make_pair(200, testing::StubServer::envelope(d.dump()));
  });
  ExperimentConfig cfg = short_config(70);
  cfg.backend.kind = BackendKind::LLM;
  cfg.backend.endpoint_url = server.url();
  cfg.backend.max_retries = 0;
  testing::TempDir dir("abort");
  RunOptions opts;
  opts.audit_dir = dir.path();
  const auto r = run_condition(Condition::ClosedLoop, 300, cfg, opts);
  CHECK(r.aborted);
  CHECK_FALSE(r.error.empty());
  CHECK(r.llm_call_count > 0);
  const auto on_disk = AuditLog::read(r.audit_path);
  CHECK(on_disk.size() == r.audit.size());
  CHECK(on_disk.size() >= 1);
  CHECK(on_disk.records()[0].prompt_hash == prompt_template_hash());
  CHECK(replay_verify(on_disk).verified());

  const auto suite = run_suite({Condition::ClosedLoop}, {300}, cfg);
  CHECK(suite.aborted().size() == 1);
  CHECK(suite.summary[0].n == 0);
}

TEST_CASE("sensitivity grid has seven rows and a zero baseline delta") {
  const auto grid = sensitivity_grid(ControlConfig{});
  REQUIRE(grid.size() == 7);
  CHECK(grid[0].first == "baseline");
  ExperimentConfig cfg = short_config(70);
  const auto rows = sensitivity_sweep(cfg, {300, 400});
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].delta_pct == 0.0);
  CHECK(rows[0].same_decisions_on_baseline_stream);
  for (const auto &row : rows) CHECK(row.finals.size() == 2);
  testing::TempDir dir("sens");
  write_sensitivity_csv(rows, dir / "s.csv");
  const auto text = testing::read_file(dir / "s.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 8);
}

TEST_CASE("format_number is shortest round trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0) == "1.0");
  CHECK(std::stod(format_number(0.6224137931034483)) == 0.6224137931034483);
}
