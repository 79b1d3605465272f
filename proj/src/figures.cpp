#include "fbllr/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fbllr/error.hpp"

namespace fbllr {
namespace {

SweepPlan make_plan(const std::string& problem, std::size_t d, std::vector<std::size_t> Ns,
                    std::vector<std::size_t> Ms, std::size_t seeds, ReferenceSpec ref) {
    SweepPlan p;
    p.problem = problem;
    p.d = d;
    p.N_values = std::move(Ns);
    p.M_values = std::move(Ms);
    p.seeds_per_cell = seeds;
    p.reference = ref;
    return p;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids = {"ac100", "ac_log", "burgers", "hj"};
    return ids;
}

std::vector<FigureCheck> figure_checks(const std::string& id, const std::string& scale) {
    if (std::find(figure_ids().begin(), figure_ids().end(), id) == figure_ids().end()) {
        throw NotFound("unknown figure id '" + id + "'");
    }
    if (scale != "desk" && scale != "paper") throw InvalidArgument("scale must be desk or paper, got '" + scale + "'");
    const bool desk = scale == "desk";
    SolverConfig cfg;
    std::vector<FigureCheck> out;

    if (id == "ac100") {
        FigureCheck c;
        c.label = "allen_cahn_dw d=100";
        c.plan = make_plan("allen_cahn_dw", 100,
                           desk ? std::vector<std::size_t>{400, 800, 1600, 3200}
                                : std::vector<std::size_t>{1250, 2500, 5000, 10000},
                           {100}, 5, ReferenceSpec::cited(0.0528));
        c.config = cfg;
        c.max_rel_err_finest = 0.02;
        c.slope_range = {{0.7, 1.3}};
        out.push_back(c);
    } else if (id == "ac_log") {
        FigureCheck c;
        c.label = "allen_cahn_log d=100";
        c.plan = make_plan("allen_cahn_log", 100,
                           desk ? std::vector<std::size_t>{500, 1000, 2000, 4000}
                                : std::vector<std::size_t>{500, 1000, 2000, 4000, 8000, 16000, 32000},
                           {100}, desk ? 3 : 5, ReferenceSpec::exact());
        c.config = cfg;
        c.slope_range = {{0.7, 1.3}};
        out.push_back(c);
    } else if (id == "burgers") {
        FigureCheck c;
        c.label = desk ? "burgers d=500" : "burgers d=10000";
        c.plan = make_plan("burgers", desk ? 500 : 10000,
                           desk ? std::vector<std::size_t>{200, 400, 800, 1600}
                                : std::vector<std::size_t>{400, 800, 1600, 3200},
                           {100}, desk ? 2 : 1, ReferenceSpec::exact());
        c.config = cfg;
        c.max_rel_err_finest = 0.02;
        c.slope_range = {{0.7, 1.3}};
        out.push_back(c);
    } else {
        // d = 50 needs one octave beyond N = 3200 to reach the 1% band.
        FigureCheck c50;
        c50.label = "hj_gradient_sink d=50";
        c50.plan = make_plan("hj_gradient_sink", 50,
                             desk ? std::vector<std::size_t>{800, 1600, 3200, 6400}
                                  : std::vector<std::size_t>{3200, 6400, 12800, 25600},
                             {50, 100}, desk ? 3 : 5, ReferenceSpec::exact());
        c50.config = cfg;
        c50.max_rel_err_finest = 0.01;
        c50.slope_range = {{0.7, 1.3}};
        c50.max_slope_spread = 0.2;
        out.push_back(c50);

        FigureCheck c500 = c50;
        c500.label = "hj_gradient_sink d=500";
        c500.plan = make_plan("hj_gradient_sink", 500,
                              desk ? std::vector<std::size_t>{200, 400, 800, 1600}
                                   : std::vector<std::size_t>{6400, 12800, 25600, 51200},
                              {50, 100}, desk ? 2 : 1, ReferenceSpec::exact());
        out.push_back(c500);
    }
    return out;
}

CheckOutcome evaluate(const FigureCheck& check, const SweepResult& result) {
    CheckOutcome out;
    auto record = [&](bool ok, const std::string& text) {
        out.passed = out.passed && ok;
        out.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + check.label + ": " + text);
    };
    for (const auto& row : result.rows) {
        if (row.status != "ok") {
            record(false, "N=" + std::to_string(row.N) + " M=" + std::to_string(row.M) + " seed=" +
                              std::to_string(row.seed) + " status " + row.status + " " + row.message);
        }
    }
    std::vector<double> slopes;
    for (std::size_t M : check.plan.M_values) {
        const std::string tag = "M=" + std::to_string(M);
        if (check.max_rel_err_finest) {
            const auto p = result.finest(M);
            if (!p || p->N != check.plan.N_values.back()) {
                record(false, tag + " no result at the finest N");
            } else {
                record(p->mean_rel_err <= *check.max_rel_err_finest,
                       tag + " N=" + std::to_string(p->N) +
                           fmt(" rel_err %.4g (limit %.4g), mean Y0 %.8g", p->mean_rel_err,
                               *check.max_rel_err_finest, p->mean_y0));
            }
        }
        const auto it = result.fitted_slope.find(M);
        if (check.slope_range) {
            if (it == result.fitted_slope.end()) {
                record(false, tag + " no fitted slope");
            } else {
                const auto [lo, hi] = *check.slope_range;
                record(it->second >= lo && it->second <= hi, tag + fmt(" slope %.4f (range [%.2f, %.2f])", it->second, lo, hi));
            }
        }
        if (it != result.fitted_slope.end()) slopes.push_back(it->second);
    }
    if (check.max_slope_spread) {
        if (slopes.size() != check.plan.M_values.size() || slopes.empty()) {
            record(false, "slope spread over M unavailable");
        } else {
            const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
            record(*hi - *lo <= *check.max_slope_spread,
                   fmt("slope spread over M %.4f (limit %.2f)", *hi - *lo, *check.max_slope_spread));
        }
    }
    return out;
}

}  // namespace fbllr
