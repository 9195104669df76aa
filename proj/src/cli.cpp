#include "evc/cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "evc/sim.hpp"

namespace evc::cli {

namespace fs = std::filesystem;

namespace {

// Runs a command body, translating failures into exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return io_failure;
  } catch (const ValidationError& e) {
    for (const auto& d : e.diagnostics()) err << "error: " << d.message << '\n';
    return validation_failure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::ParseError:
      case ErrorCode::ScenarioInvalid:
        return validation_failure;
      default:
        return engine_failure;
    }
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return io_failure;
  }
}

// Problems found while reading a scenario are validation failures, whatever their code.
Scenario load_valid(const fs::path& path) {
  Scenario scenario;
  try {
    scenario = load_scenario(path);
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError({Diagnostic{e.code(), e.what()}});
  }
  validate_scenario(scenario);
  return scenario;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw fs::filesystem_error("cannot write output", path, std::make_error_code(std::errc::permission_denied));
  }
  file << content;
}

std::string topology_document(const Scenario& scenario) {
  const PlannedOverlay planned = plan_scenario_topology(scenario);
  return topology_to_json(planned.plan.topology, planned.routes).dump(2) + "\n";
}

}  // namespace

int cmd_validate(const fs::path& scenario_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario scenario;
    try {
      scenario = load_scenario(scenario_path);
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError({Diagnostic{e.code(), e.what()}});
    }
    const auto diagnostics = check_scenario(scenario);
    for (const auto& d : diagnostics) err << "error: " << d.message << '\n';
    if (!diagnostics.empty()) return static_cast<int>(validation_failure);
    out << "ok: " << scenario_path.string() << '\n';
    return static_cast<int>(ok);
  });
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    for (const auto& item : config.emit) {
      if (item != "events" && item != "timeline" && item != "summary" && item != "topology") {
        err << "error: unknown --emit item '" << item << "'\n";
        return static_cast<int>(validation_failure);
      }
    }
    const Scenario scenario = load_valid(config.scenario_path);
    const RunResult result = run_scenario(scenario, config.seed);
    fs::create_directories(config.output_dir);
    if (config.emit.count("events")) write_file(config.output_dir / "events.jsonl", events_jsonl(result.timeline));
    if (config.emit.count("timeline")) write_file(config.output_dir / "timeline.csv", timeline_csv(result.timeline));
    const std::string summary = summary_json(result.report).dump(2) + "\n";
    if (config.emit.count("summary")) write_file(config.output_dir / "summary.json", summary);
    if (config.emit.count("topology")) write_file(config.output_dir / "topology.json", topology_document(scenario));
    out << summary;
    return static_cast<int>(ok);
  });
}

int cmd_compare(const fs::path& a, const fs::path& b, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario first = load_valid(a);
    const Scenario second = load_valid(b);
    out << comparison_json(compare_scenarios(first, second, seed)).dump(2) << '\n';
    return static_cast<int>(ok);
  });
}

int cmd_plan_topology(const fs::path& scenario_path, const std::optional<fs::path>& out_file, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] {
    const std::string document = topology_document(load_valid(scenario_path));
    if (out_file) {
      if (out_file->has_parent_path()) fs::create_directories(out_file->parent_path());
      write_file(*out_file, document);
    } else {
      out << document;
    }
    return static_cast<int>(ok);
  });
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event simulator for hybrid elastic virtual clusters", "evcsim"};
  app.require_subcommand(1);

  fs::path validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file and report every violation");
  validate->add_option("--scenario", validate_path, "Scenario JSON")->required();

  RunConfig run_config;
  std::string emit_list = "events,timeline,summary,topology";
  auto* run = app.add_subcommand("run", "Simulate a scenario and write the requested outputs");
  run->add_option("--scenario", run_config.scenario_path, "Scenario JSON")->required();
  run->add_option("--seed", run_config.seed, "Random seed")->default_val(0);
  run->add_option("--out", run_config.output_dir, "Output directory")->default_val(".");
  run->add_option("--emit", emit_list, "Comma-separated subset of events,timeline,summary,topology");

  std::vector<fs::path> compare_paths;
  std::uint64_t compare_seed = 0;
  auto* compare = app.add_subcommand("compare", "Run two scenarios with one seed and report b - a");
  compare->add_option("--scenario", compare_paths, "Scenario A then scenario B")->required()->expected(2);
  compare->add_option("--seed", compare_seed, "Random seed")->default_val(0);

  fs::path topology_path;
  std::optional<fs::path> topology_out;
  auto* topology = app.add_subcommand("plan-topology", "Print the overlay plan for a scenario at full scale");
  topology->add_option("--scenario", topology_path, "Scenario JSON")->required();
  topology->add_option("--out", topology_out, "Write to this file instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? ok : validation_failure;
  }

  if (*validate) return cmd_validate(validate_path, out, err);
  if (*run) {
    run_config.emit.clear();
    std::stringstream items(emit_list);
    for (std::string item; std::getline(items, item, ',');) {
      if (!item.empty()) run_config.emit.insert(item);
    }
    return cmd_run(run_config, out, err);
  }
  if (*compare) return cmd_compare(compare_paths[0], compare_paths[1], compare_seed, out, err);
  return cmd_plan_topology(topology_path, topology_out, out, err);
}

}  // namespace evc::cli
