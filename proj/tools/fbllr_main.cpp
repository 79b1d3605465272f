#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "fbllr/backward.hpp"
#include "fbllr/config_file.hpp"
#include "fbllr/csv.hpp"
#include "fbllr/error.hpp"
#include "fbllr/figures.hpp"
#include "fbllr/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_config) {
    auto* c = cmd->add_option("-c,--config", o.config_path, "key = value config file");
    if (needs_config) c->required();
    cmd->add_option("--set", o.overrides, "override a config key (key=value), repeatable");
    cmd->add_option("-o,--output-dir", o.output_dir, "directory for CSV output");
    cmd->add_option("--seed", o.seed, "base seed (overrides the config)");
}

fbllr::ParsedConfig load(const CommonOptions& o) {
    std::vector<std::string> overrides = o.overrides;
    if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
    return fbllr::parse_config(o.config_path, overrides);
}

std::string out_path(const CommonOptions& o, const std::string& name) {
    std::filesystem::create_directories(o.output_dir);
    return (std::filesystem::path(o.output_dir) / name).string();
}

int cmd_run(const CommonOptions& o) {
    const auto cfg = load(o);
    fbllr::RunReport rep = fbllr::run(cfg.problem, cfg.solver);
    if (auto ref = fbllr::reference_value(cfg.problem, 0.0, cfg.problem.query_point)) rep.set_reference(*ref);
    std::cout << rep.to_key_value();
    if (!o.output_dir.empty()) fbllr::emit_csv(rep, out_path(o, "run.csv"));
    return rep.ok() ? kOk : kFailure;
}

int cmd_sweep(const CommonOptions& o, int verbosity) {
    const auto cfg = load(o);
    if (!cfg.sweep) throw fbllr::ConfigError("sweep needs 'sweep_N' in the config");
    fbllr::RowCallback progress = [verbosity](const fbllr::SweepRow& r) {
        if (verbosity > 0) {
            std::cerr << "N=" << r.N << " M=" << r.M << " seed=" << r.seed << " Y0=" << fbllr::format_double(r.y0)
                      << ' ' << r.status << '\n';
        }
    };
    const auto result = fbllr::run_sweep(*cfg.sweep, cfg.solver, {}, progress);
    std::cout << fbllr::csv_header() << '\n';
    for (const auto& r : result.rows) std::cout << fbllr::csv_row(result, r) << '\n';
    for (const auto& [M, slope] : result.fitted_slope) {
        std::cout << "slope M=" << M << " " << fbllr::format_double(slope) << '\n';
    }
    if (!o.output_dir.empty()) {
        fbllr::emit_csv(result, out_path(o, "sweep.csv"));
        fbllr::emit_plot_csv(result, out_path(o, "sweep_plot.csv"));
    }
    for (const auto& r : result.rows) {
        if (r.status != "ok") return kFailure;
    }
    return kOk;
}

int cmd_gradtest(const CommonOptions& o, std::optional<std::size_t> level) {
    const auto cfg = load(o);
    const auto rep = fbllr::gradient_test(cfg.problem, cfg.solver, level);
    std::cout << "level = " << rep.level << '\n'
              << "t = " << fbllr::format_double(rep.t) << '\n'
              << "mean_rel_err = " << fbllr::format_double(rep.mean_rel_err) << '\n'
              << "max_rel_err = " << fbllr::format_double(rep.max_rel_err) << '\n'
              << "mean_cos = " << fbllr::format_double(rep.mean_cos) << '\n'
              << "mean_cg_iters = " << fbllr::format_double(rep.mean_cg_iters) << '\n';
    return kOk;
}

int cmd_scaling(const CommonOptions& o) {
    const auto cfg = load(o);
    const auto& s = cfg.settings;
    const std::vector<std::size_t> Ns = s.sweep_N.empty() ? std::vector<std::size_t>{s.solver.N} : s.sweep_N;
    const std::vector<std::size_t> Ms = s.sweep_M.empty() ? std::vector<std::size_t>{s.solver.M} : s.sweep_M;
    const auto rep = fbllr::scaling_report(cfg.problem, cfg.solver, Ns, Ms);
    std::cout << "N,M,runtime_s,forward_s,backward_s,status\n";
    for (const auto& r : rep.rows) {
        std::cout << r.N << ',' << r.M << ',' << r.runtime_s << ',' << r.forward_s << ',' << r.backward_s << ','
                  << r.status << '\n';
    }
    auto show = [](const std::optional<double>& v) { return v ? fbllr::format_double(*v) : std::string("n/a"); };
    std::cout << "n_exponent = " << show(rep.n_exponent) << '\n' << "m_exponent = " << show(rep.m_exponent) << '\n';
    for (double r : rep.n_ratios) std::cout << "n_doubling_ratio = " << r << '\n';
    if (!o.output_dir.empty()) fbllr::emit_scaling_csv(rep, out_path(o, "scaling.csv"));
    for (const auto& r : rep.rows) {
        if (r.status != "ok") return kFailure;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localized FBSDE solver with local linear regression"};
    app.require_subcommand(1);
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "more progress output (repeat for more)");

    CommonOptions run_opts, sweep_opts, grad_opts, scaling_opts;
    auto* run = app.add_subcommand("run", "solve once and print the report");
    add_common(run, run_opts, true);
    auto* sweep = app.add_subcommand("sweep", "convergence sweep over sweep_N x sweep_M");
    add_common(sweep, sweep_opts, true);
    auto* grad = app.add_subcommand("gradtest", "compare regression gradients with the exact gradient");
    add_common(grad, grad_opts, true);
    std::optional<std::size_t> grad_level;
    grad->add_option("--level", grad_level, "time level (default N/2)");
    auto* scaling = app.add_subcommand("scaling", "runtime table over sweep_N x sweep_M");
    add_common(scaling, scaling_opts, true);

    std::string figure, scale = "desk", repro_dir = "reproduce_out";
    std::optional<std::uint64_t> repro_seed;
    auto* repro = app.add_subcommand("reproduce", "pre-baked convergence plans");
    repro->add_option("figure", figure, "ac100 | ac_log | burgers | hj")->required();
    repro->add_option("scale", scale, "desk | paper");
    repro->add_option("-o,--output-dir", repro_dir, "directory for CSV output");
    repro->add_option("--seed", repro_seed, "base seed");

    for (auto* sub : {run, sweep, grad, scaling, repro}) {
        sub->add_flag("-v,--verbose", verbosity, "more progress output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts, verbosity);
        if (*grad) return cmd_gradtest(grad_opts, grad_level);
        if (*scaling) return cmd_scaling(scaling_opts);
        if (*repro) {
            const auto& ids = fbllr::figure_ids();
            if (std::find(ids.begin(), ids.end(), figure) == ids.end() || (scale != "desk" && scale != "paper")) {
                std::cerr << "usage: fbllr reproduce <ac100|ac_log|burgers|hj> [desk|paper]\n";
                return kUsage;
            }
            return fbllr::cli::reproduce(figure, scale, repro_dir, repro_seed, verbosity);
        }
    } catch (const fbllr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const fbllr::NotFound& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const fbllr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
