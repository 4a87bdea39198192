#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "carelab/audit.hpp"
#include "carelab/errors.hpp"
#include "carelab/experiments.hpp"

namespace py = pybind11;
using namespace carelab;

namespace {

// Round-trips through the json module; configs are small.
nlohmann::json to_cpp_json(const py::object &obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object to_py_json(const nlohmann::json &j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

ExperimentConfig config_arg(const py::object &config) {
  if (config.is_none()) return {};
  auto cfg = config_from_json(to_cpp_json(config));
  cfg.validate();
  return cfg;
}

RunOptions options_arg(const std::optional<std::string> &audit_dir) {
  RunOptions opts;
  if (audit_dir) opts.audit_dir = *audit_dir;
  return opts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "carelab simulation, diagnosis, control, audit and statistics";

  py::register_exception<InvalidConfiguration>(m, "InvalidConfiguration", PyExc_ValueError);
  py::register_exception<SchemaViolation>(m, "SchemaViolation", PyExc_ValueError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_RuntimeError);
  py::register_exception<BackendUnavailable>(m, "BackendUnavailable", PyExc_RuntimeError);
  py::register_exception<InsufficientSample>(m, "InsufficientSample", PyExc_ValueError);

  py::enum_<Condition>(m, "Condition")
      .value("BASELINE", Condition::Baseline)
      .value("FIXED_POLICY", Condition::FixedPolicy)
      .value("LLM_MAPPING", Condition::LLMMapping)
      .value("CLOSED_LOOP", Condition::ClosedLoop)
      .value("BLACK_BOX", Condition::BlackBox)
      .def_static("parse", [](const std::string &s) { return parse_condition(s); })
      .def_property_readonly("label", [](Condition c) { return std::string(to_string(c)); });

  py::class_<PolicyParams>(m, "PolicyParams")
      .def(py::init<>())
      .def(py::init<double, double, double>(), py::arg("theta_s"), py::arg("theta_t"), py::arg("theta_p"))
      .def_property_readonly("theta_s", &PolicyParams::theta_s)
      .def_property_readonly("theta_t", &PolicyParams::theta_t)
      .def_property_readonly("theta_p", &PolicyParams::theta_p)
      .def("adjusted", &PolicyParams::adjusted)
      .def(py::self == py::self)
      .def("__repr__", [](const PolicyParams &p) {
        return "PolicyParams(" + format_number(p.theta_s()) + ", " + format_number(p.theta_t()) + ", " +
               format_number(p.theta_p()) + ")";
      });

  py::class_<AgentState>(m, "AgentState")
      .def_readonly("id", &AgentState::id)
      .def_readwrite("loneliness", &AgentState::loneliness)
      .def_readwrite("frailty", &AgentState::frailty)
      .def_readwrite("stress", &AgentState::stress)
      .def_readwrite("energy", &AgentState::energy)
      .def_readonly("baseline_loneliness", &AgentState::baseline_loneliness)
      .def_readonly("age", &AgentState::age);

  py::class_<World>(m, "World")
      .def_readonly("day", &World::day)
      .def_readwrite("agents", &World::agents)
      .def_readonly("total_visits", &World::total_visits)
      .def_property_readonly("edges", [](const World &w) { return w.network.edges(); })
      .def("degree", [](const World &w, int id) { return w.network.degree(id); })
      .def("interaction_history", &World::interaction_history)
      .def("__len__", &World::size)
      .def(py::self == py::self);

  m.def(
      "init_world",
      [](std::uint64_t seed, int n_agents, const py::object &dynamics) {
        DynamicsConfig d = dynamics.is_none() ? DynamicsConfig{} : dynamics_from_json(to_cpp_json(dynamics));
        return init_world(seed, n_agents, d);
      },
      py::arg("seed"), py::arg("n_agents") = 30, py::arg("dynamics") = py::none());
  m.def("step_day", &step_day, py::arg("world"), py::arg("policy") = py::none());
  m.def("update_network", &update_network);
  m.def("mean_loneliness", &mean_loneliness);

  py::class_<Diagnosis>(m, "Diagnosis")
      .def_readonly("agent_id", &Diagnosis::agent_id)
      .def_readonly("risk_loneliness", &Diagnosis::risk_loneliness)
      .def_property_readonly("risk_label", [](const Diagnosis &d) { return std::string(to_string(d.risk_label)); })
      .def_property_readonly("risk_frailty_label",
                             [](const Diagnosis &d) { return std::string(to_string(d.risk_frailty_label)); })
      .def_readonly("primary_driver", &Diagnosis::primary_driver)
      .def_readonly("priority_social", &Diagnosis::priority_social)
      .def_readonly("priority_visit", &Diagnosis::priority_visit)
      .def("to_dict", [](const Diagnosis &d) { return to_py_json(to_json(d)); });

  py::class_<MacroStats>(m, "MacroStats")
      .def(py::init([](double r, double p_s, double p_v, int n_diagnosed, int day) {
             return MacroStats{r, p_s, p_v, n_diagnosed, day};
           }),
           py::arg("r"), py::arg("p_s"), py::arg("p_v"), py::arg("n_diagnosed") = 0, py::arg("day") = 0)
      .def_readonly("r", &MacroStats::r)
      .def_readonly("p_s", &MacroStats::p_s)
      .def_readonly("p_v", &MacroStats::p_v)
      .def_readonly("n_diagnosed", &MacroStats::n_diagnosed)
      .def_readonly("day", &MacroStats::day);

  m.def("heuristic_diagnose", &heuristic_diagnose, py::arg("agent"), py::arg("degree"));
  m.def("parse_response", &parse_response, py::arg("text"));
  m.def(
      "aggregate",
      [](const std::vector<Diagnosis> &diagnoses, int population_size, int day) {
        return aggregate(diagnoses, population_size, day);
      },
      py::arg("diagnoses"), py::arg("population_size"), py::arg("day") = 0);

  py::class_<ControlConfig>(m, "ControlConfig")
      .def(py::init<>())
      .def_readwrite("risk_threshold", &ControlConfig::risk_threshold)
      .def_readwrite("priority_threshold", &ControlConfig::priority_threshold)
      .def_readwrite("update_cap", &ControlConfig::update_cap)
      .def_readwrite("theta_t_step", &ControlConfig::theta_t_step)
      .def_readwrite("theta_p_step", &ControlConfig::theta_p_step)
      .def_readwrite("social_gain", &ControlConfig::social_gain)
      .def("validate", &ControlConfig::validate);

  py::class_<ControlDecision>(m, "ControlDecision")
      .def_readonly("delta_theta_s", &ControlDecision::delta_theta_s)
      .def_readonly("delta_theta_t", &ControlDecision::delta_theta_t)
      .def_readonly("delta_theta_p", &ControlDecision::delta_theta_p)
      .def_readonly("new_params", &ControlDecision::new_params)
      .def_property_readonly("fired_rules",
                             [](const ControlDecision &d) {
                               std::vector<std::string> ids;
                               for (const auto &f : d.fired_rules) ids.push_back(f.rule);
                               return ids;
                             })
      .def("is_zero", &ControlDecision::is_zero);

  m.def("closed_loop_update", &closed_loop_update, py::arg("stats"), py::arg("params"),
        py::arg("config") = ControlConfig{});
  m.def("llm_mapping_update", &llm_mapping_update, py::arg("stats"));

  m.def("cohens_d", [](const std::vector<double> &a, const std::vector<double> &b) { return stats::cohens_d(a, b); });
  m.def(
      "t_test",
      [](const std::vector<double> &a, const std::vector<double> &b, bool welch) {
        const auto r = stats::t_test(a, b, welch ? stats::TTestVariant::Welch : stats::TTestVariant::Student);
        return py::dict(py::arg("t") = r.t, py::arg("df") = r.df, py::arg("p_value") = r.p_value);
      },
      py::arg("a"), py::arg("b"), py::arg("welch") = false);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("seed", &RunResult::seed)
      .def_readonly("condition", &RunResult::condition)
      .def_readonly("final_mean_loneliness", &RunResult::final_mean_loneliness)
      .def_readonly("daily_means", &RunResult::daily_means)
      .def_readonly("param_history", &RunResult::param_history)
      .def_readonly("daily_visits", &RunResult::daily_visits)
      .def_readonly("visit_count", &RunResult::visit_count)
      .def_readonly("llm_call_count", &RunResult::llm_call_count)
      .def_readonly("audit_path", &RunResult::audit_path)
      .def_readonly("aborted", &RunResult::aborted)
      .def_readonly("error", &RunResult::error)
      .def_property_readonly("audit_ndjson", [](const RunResult &r) { return r.audit.serialize(); });

  m.def(
      "run_condition",
      [](const std::string &condition, std::uint64_t seed, const py::object &config,
         const std::optional<std::string> &audit_dir) {
        const auto cfg = config_arg(config);
        py::gil_scoped_release release;
        return run_condition(parse_condition(condition), seed, cfg, options_arg(audit_dir));
      },
      py::arg("condition"), py::arg("seed"), py::arg("config") = py::none(), py::arg("audit_dir") = py::none());

  m.def(
      "run_suite",
      [](const std::vector<std::string> &conditions, const std::optional<std::vector<std::uint64_t>> &seeds,
         const py::object &config, int jobs) {
        const auto cfg = config_arg(config);
        std::vector<Condition> conds;
        for (const auto &c : conditions) conds.push_back(parse_condition(c));
        SuiteResult suite;
        {
          py::gil_scoped_release release;
          suite = run_suite(conds, seeds.value_or(cfg.seeds), cfg, {}, jobs);
        }
        py::dict summary;
        for (const auto &s : suite.summary) {
          py::dict row;
          row["n"] = s.n;
          row["mean"] = s.mean;
          row["sd"] = s.sd ? py::cast(*s.sd) : py::none();
          row["min"] = s.min;
          row["max"] = s.max;
          summary[py::str(std::string(to_string(s.condition)))] = row;
        }
        py::list pairwise;
        for (const auto &p : suite.pairwise) {
          py::dict row;
          row["a"] = std::string(to_string(p.a));
          row["b"] = std::string(to_string(p.b));
          row["mean_diff"] = p.result.mean_diff;
          row["improvement_pct"] = p.result.improvement_pct;
          row["cohens_d"] = p.result.cohens_d;
          row["p_value"] = p.result.p_value;
          pairwise.append(row);
        }
        py::dict out;
        out["runs"] = suite.runs;
        out["summary"] = summary;
        out["pairwise"] = pairwise;
        return out;
      },
      py::arg("conditions"), py::arg("seeds") = py::none(), py::arg("config") = py::none(), py::arg("jobs") = 0);

  py::class_<AuditLog>(m, "AuditLog")
      .def("__len__", [](const AuditLog &l) { return l.records().size(); })
      .def("serialize", &AuditLog::serialize);
  m.def("read_audit_log", [](const std::string &path) { return AuditLog::read(path); });
  m.def("parse_audit_log", [](const std::string &text) { return AuditLog::parse(text); });

  m.def(
      "replay_verify",
      [](const AuditLog &log, const ControlConfig &config) {
        const auto v = replay_verify(log, config);
        py::list mismatches;
        for (const auto &mm : v.mismatches) {
          py::dict row;
          row["index"] = mm.index;
          row["day"] = mm.day;
          row["field"] = mm.field;
          row["recorded"] = mm.recorded;
          row["recomputed"] = mm.recomputed;
          mismatches.append(row);
        }
        py::dict out;
        out["replayable"] = v.replayable;
        out["verified"] = v.verified();
        out["note"] = v.note;
        out["mismatches"] = mismatches;
        return out;
      },
      py::arg("log"), py::arg("config") = ControlConfig{});
}
