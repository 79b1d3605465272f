#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbllr/harness.hpp"
#include "fbllr/solver_config.hpp"

namespace fbllr {

/// A pre-baked sweep and the thresholds it is judged against.
struct FigureCheck {
    std::string label;
    SweepPlan plan;
    SolverConfig config;
    std::optional<double> max_rel_err_finest;  // every M, at the largest N
    std::optional<std::pair<double, double>> slope_range;
    std::optional<double> max_slope_spread;  // max - min fitted slope over M
};

const std::vector<std::string>& figure_ids();

/// Plans for ac100 | ac_log | burgers | hj at scale desk | paper. Throws
/// NotFound for an unknown id and InvalidArgument for an unknown scale.
std::vector<FigureCheck> figure_checks(const std::string& id, const std::string& scale);

struct CheckOutcome {
    bool passed = true;
    std::vector<std::string> lines;  // one per metric, prefixed PASS/FAIL
};

CheckOutcome evaluate(const FigureCheck& check, const SweepResult& result);

}  // namespace fbllr
