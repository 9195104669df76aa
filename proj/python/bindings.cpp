#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evc/sim.hpp"

namespace py = pybind11;

namespace {

evc::Scenario scenario_from_json(const std::string& text) {
  evc::Scenario scenario;
  try {
    scenario = evc::parse_scenario(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw evc::Error(evc::ErrorCode::ParseError, e.what());
  }
  evc::validate_scenario(scenario);
  return scenario;
}

std::vector<std::string> check(const std::string& text) {
  evc::Scenario scenario;
  try {
    scenario = evc::parse_scenario(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    return {e.what()};
  } catch (const evc::ValidationError& e) {
    std::vector<std::string> out;
    for (const auto& d : e.diagnostics()) out.push_back(d.message);
    return out;
  } catch (const evc::Error& e) {
    return {e.what()};
  }
  std::vector<std::string> out;
  for (const auto& d : evc::check_scenario(scenario)) out.push_back(d.message);
  return out;
}

py::dict run(const std::string& text, std::optional<std::uint64_t> seed) {
  const auto scenario = scenario_from_json(text);
  evc::RunResult result;
  {
    py::gil_scoped_release release;
    result = evc::run_scenario(scenario, seed.value_or(scenario.seed));
  }
  py::dict out;
  out["summary"] = evc::summary_json(result.report).dump();
  out["events"] = evc::events_jsonl(result.timeline);
  out["timeline"] = evc::timeline_csv(result.timeline);
  return out;
}

std::string compare(const std::string& a, const std::string& b, std::uint64_t seed) {
  const auto first = scenario_from_json(a);
  const auto second = scenario_from_json(b);
  py::gil_scoped_release release;
  return evc::comparison_json(evc::compare_scenarios(first, second, seed)).dump();
}

std::string plan_topology(const std::string& text) {
  const auto planned = evc::plan_scenario_topology(scenario_from_json(text));
  return evc::topology_to_json(planned.plan.topology, planned.routes).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the evcsim simulator; use the evcsim package instead.";
  auto error = py::register_exception<evc::Error>(m, "EvcError", PyExc_ValueError);
  (void)error;
  m.def("check", &check, py::arg("scenario_json"));
  m.def("run", &run, py::arg("scenario_json"), py::arg("seed") = py::none());
  m.def("compare", &compare, py::arg("a_json"), py::arg("b_json"), py::arg("seed"));
  m.def("plan_topology", &plan_topology, py::arg("scenario_json"));
  m.def(
      "accrue_cost",
      [](double seconds, double per_hour, double granularity) {
        return evc::accrue_cost(seconds, evc::CostRate{per_hour, granularity});
      },
      py::arg("seconds"), py::arg("per_hour"), py::arg("granularity") = 1.0);
}
