#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pfimex/experiments.hpp"

namespace pfimex {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

/// Entry point of the `pfimex` tool.  args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Human-readable run plan: number of runs/cells and the total step budget.
std::string describe_plan(const ExperimentSpec& spec);

/// Writes manifest.json (config echo, version, seeds, timings) into spec.out_dir.
void write_manifest(const ExperimentSpec& spec, const std::string& command, double wall_seconds);

}  // namespace pfimex
