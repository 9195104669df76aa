#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>

namespace evc::cli {

enum ExitCode : int { ok = 0, validation_failure = 1, io_failure = 2, engine_failure = 3 };

struct RunConfig {
  std::filesystem::path scenario_path;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
  std::set<std::string> emit = {"events", "timeline", "summary", "topology"};
};

int cmd_validate(const std::filesystem::path& scenario_path, std::ostream& out, std::ostream& err);
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, std::uint64_t seed, std::ostream& out,
                std::ostream& err);
int cmd_plan_topology(const std::filesystem::path& scenario_path, const std::optional<std::filesystem::path>& out_file,
                      std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace evc::cli
