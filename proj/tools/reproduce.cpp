#include <filesystem>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "fbllr/csv.hpp"
#include "fbllr/error.hpp"
#include "fbllr/figures.hpp"

namespace fbllr::cli {

int reproduce(const std::string& id, const std::string& scale, const std::string& output_dir,
              std::optional<std::uint64_t> seed, int verbosity) {
    const std::vector<FigureCheck> checks = figure_checks(id, scale);
    std::filesystem::create_directories(output_dir);
    const std::string summary_path = (std::filesystem::path(output_dir) / (id + "_" + scale + "_summary.txt")).string();
    std::ofstream summary(summary_path, std::ios::binary);
    if (!summary) throw Error("cannot open '" + summary_path + "' for writing");

    bool all_passed = true;
    for (const auto& check : checks) {
        SolverConfig cfg = check.config;
        if (seed) cfg.seed = *seed;
        RowCallback progress;
        if (verbosity > 0) {
            progress = [](const SweepRow& r) {
                std::cerr << "  N=" << r.N << " M=" << r.M << " seed=" << r.seed << " Y0=" << format_double(r.y0)
                          << " t=" << r.runtime_s << "s " << r.status << '\n';
            };
        }
        std::cout << "== " << check.label << " (" << scale << ")\n";
        const SweepResult result = run_sweep(check.plan, cfg, {}, progress);
        const std::string stem = id + "_" + scale + "_d" + std::to_string(check.plan.d);
        emit_csv(result, (std::filesystem::path(output_dir) / (stem + "_sweep.csv")).string());
        emit_plot_csv(result, (std::filesystem::path(output_dir) / (stem + "_plot.csv")).string());

        summary << "== " << check.label << " (" << scale << ")\n";
        for (const auto& p : result.points) {
            summary << "N=" << p.N << " M=" << p.M << " dt=" << format_double(p.dt)
                    << " mean_Y0=" << format_double(p.mean_y0) << " mean_abs_err=" << format_double(p.mean_abs_err)
                    << " mean_rel_err=" << format_double(p.mean_rel_err) << '\n';
        }
        for (const auto& [M, slope] : result.fitted_slope) {
            summary << "slope M=" << M << " " << format_double(slope) << '\n';
        }
        const CheckOutcome outcome = evaluate(check, result);
        for (const auto& line : outcome.lines) {
            std::cout << line << '\n';
            summary << line << '\n';
        }
        all_passed = all_passed && outcome.passed;
    }
    summary << (all_passed ? "RESULT PASS\n" : "RESULT FAIL\n");
    std::cout << (all_passed ? "RESULT PASS" : "RESULT FAIL") << '\n';
    return all_passed ? 0 : 1;
}

}  // namespace fbllr::cli
