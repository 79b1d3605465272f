#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbllr/harness.hpp"
#include "fbllr/problem.hpp"
#include "fbllr/solver_config.hpp"

namespace fbllr {

/// Everything a config file can say, before problem construction.
struct RunSettings {
    std::string problem;
    std::size_t d = 0;
    ProblemParams params;  // T, x0 and problem-specific keys
    SolverConfig solver;
    std::vector<std::size_t> sweep_N;
    std::vector<std::size_t> sweep_M;
    std::size_t seeds_per_cell = 5;
    /// "auto" (exact or cited when available), "exact", "none", or a number.
    std::string reference = "auto";
    bool parallel_cells = false;

    /// Where each key was set ("file.cfg:3", "--set"); used in error messages.
    std::map<std::string, std::string> origin;

    bool operator==(const RunSettings& o) const;
};

struct ParsedConfig {
    RunSettings settings;
    ProblemSpec problem;
    SolverConfig solver;
    std::optional<SweepPlan> sweep;  // present when sweep_N is set
};

/// Keys recognised in config files and --set overrides.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines (`#` starts a comment), then applies overrides
/// of the form "key=value". Unknown keys, duplicates within the file and
/// malformed values throw ConfigError naming the key and its line.
RunSettings parse_settings(const std::string& text, const std::string& source,
                           const std::vector<std::string>& overrides = {});

/// Builds and validates problem, solver config and optional sweep plan.
ParsedConfig build_config(const RunSettings& settings);

/// Reads `path` and runs parse_settings + build_config.
ParsedConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Inverse of parse_settings; every key is written explicitly.
std::string serialize_config(const RunSettings& settings);

}  // namespace fbllr
