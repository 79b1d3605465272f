#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fbllr/config_file.hpp"
#include "fbllr/error.hpp"

using namespace fbllr;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "<no ConfigError>";
}

}  // namespace

TEST(Config, MinimalFileUsesDefaults) {
    const RunSettings s = parse_settings("problem = linear_heat\nd = 3\n", "min.cfg");
    const ParsedConfig cfg = build_config(s);
    EXPECT_EQ(cfg.problem.dimension, 3u);
    EXPECT_EQ(cfg.solver, SolverConfig{});
    EXPECT_FALSE(cfg.sweep.has_value());
}

TEST(Config, CommentsAndWhitespace) {
    const RunSettings s = parse_settings("# header\n  problem=burgers   # inline\n\n d =\t10\nnu = 0.2\n", "c.cfg");
    EXPECT_EQ(s.problem, "burgers");
    EXPECT_EQ(s.d, 10u);
    EXPECT_EQ(s.origin.at("d"), "c.cfg:4");
}

TEST(Config, OverrideWinsOverFile) {
    const RunSettings s = parse_settings("problem = linear_heat\nd = 2\nN = 50\n", "f.cfg", {"N=200", "kernel=epanechnikov"});
    EXPECT_EQ(s.solver.N, 200u);
    EXPECT_EQ(s.solver.kernel.kind, KernelKind::Epanechnikov);
    EXPECT_EQ(s.origin.at("N"), "--set N");
}

TEST(Config, MissingRidgeIsReportedWithItsKey) {
    const RunSettings s = parse_settings("problem = allen_cahn_dw\nd = 100\nM = 10\nridge_lambda = 0\n", "r.cfg");
    const std::string msg = error_of([&] { build_config(s); });
    EXPECT_NE(msg.find("ridge required when M <= d+1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("r.cfg:4"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyNamesTheLine) {
    const std::string msg = error_of([] { parse_settings("problem = burgers\nbandwith = 3\n", "u.cfg"); });
    EXPECT_NE(msg.find("u.cfg:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bandwith"), std::string::npos) << msg;
}

TEST(Config, MalformedValuesNameKeyAndLine) {
    for (const auto& [text, key] : std::vector<std::pair<std::string, std::string>>{
             {"N = ten\n", "N"},
             {"cg_tol = 1e-x\n", "cg_tol"},
             {"kernel = box\n", "kernel"},
             {"skip_unused_gradient = maybe\n", "skip_unused_gradient"},
             {"sweep_N = 10,,20\n", "sweep_N"},
             {"x0 = 0.1,abc\n", "x0"},
             {"reference = soon\n", "reference"},
             {"d = 0\n", "d"}}) {
        const std::string msg = error_of([&] { parse_settings(text, "m.cfg"); });
        EXPECT_NE(msg.find("m.cfg:1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'" + key + "'"), std::string::npos) << msg;
    }
    EXPECT_NE(error_of([] { parse_settings("just words\n", "m.cfg"); }).find("m.cfg:1"), std::string::npos);
}

TEST(Config, DuplicateKeyIsAnError) {
    const std::string msg = error_of([] { parse_settings("N = 1\nM = 4\nN = 2\n", "dup.cfg"); });
    EXPECT_NE(msg.find("dup.cfg:3"), std::string::npos) << msg;
}

TEST(Config, UnknownProblemAndMissingKeys) {
    EXPECT_NE(error_of([] { build_config(parse_settings("problem = nope\nd = 2\n", "p.cfg")); }).find("p.cfg:1"),
              std::string::npos);
    EXPECT_NE(error_of([] { build_config(parse_settings("d = 2\n", "p.cfg")); }).find("problem"), std::string::npos);
    EXPECT_NE(error_of([] { build_config(parse_settings("problem = burgers\n", "p.cfg")); }).find("'d'"),
              std::string::npos);
}

TEST(Config, RoundTrip) {
    const std::string text =
        "problem = hj_gradient_sink\nd = 7\nT = 0.5\nx0 = 0.1,0.2,0.3,0.4,0.5,0.6,0.7\nN = 123\nM = 45\nseed = 99\n"
        "kernel = epanechnikov\nbandwidth_rule = scaled_sqrt_dt\nbandwidth_c = 2.5\nridge_lambda = 1e-6\n"
        "cg_tol = 1e-9\ncg_maxiter = 77\nnewton_tol = 1e-11\nnewton_maxiter = 30\nmemory_budget_mb = 64\n"
        "checkpoint_stride = 5\nconditional_mean = local_intercept\nskip_unused_gradient = false\nworkers = 3\n"
        "sweep_N = 10,20,40\nsweep_M = 50,100\nseeds_per_cell = 4\nreference = none\nparallel_cells = true\n";
    const RunSettings a = parse_settings(text, "a.cfg");
    const RunSettings b = parse_settings(serialize_config(a), "b.cfg");
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize_config(a), serialize_config(b));

    const RunSettings c = parse_settings("problem = burgers\nd = 4\n", "c.cfg");
    EXPECT_EQ(c, parse_settings(serialize_config(c), "d.cfg"));
}

TEST(Config, EveryKeyIsKnown) {
    for (const auto& key : config_keys()) {
        const std::string msg = error_of([&] { parse_settings(key + " = @\n", "k.cfg"); });
        EXPECT_EQ(msg.find("unknown key"), std::string::npos) << msg;
    }
}

TEST(Config, SweepPlanIsBuilt) {
    const ParsedConfig cfg =
        build_config(parse_settings("problem = burgers\nd = 5\nsweep_N = 10,20\nsweep_M = 30,60\nseeds_per_cell = 2\n", "s.cfg"));
    ASSERT_TRUE(cfg.sweep.has_value());
    EXPECT_EQ(cfg.sweep->N_values, (std::vector<std::size_t>{10, 20}));
    EXPECT_EQ(cfg.sweep->M_values, (std::vector<std::size_t>{30, 60}));
    EXPECT_EQ(cfg.sweep->seeds_per_cell, 2u);
    EXPECT_EQ(cfg.sweep->reference.kind, ReferenceKind::Exact);

    const ParsedConfig ac = build_config(parse_settings("problem = allen_cahn_dw\nd = 5\nsweep_N = 10,20\n", "s.cfg"));
    EXPECT_EQ(ac.sweep->reference.kind, ReferenceKind::None);
    EXPECT_EQ(ac.sweep->M_values, (std::vector<std::size_t>{ac.solver.M}));

    const ParsedConfig cited =
        build_config(parse_settings("problem = allen_cahn_dw\nd = 5\nsweep_N = 10,20\nreference = 0.05\n", "s.cfg"));
    EXPECT_EQ(cited.sweep->reference, ReferenceSpec::cited(0.05));

    EXPECT_NE(error_of([] { build_config(parse_settings("problem = burgers\nd = 5\nsweep_N = 20,10\n", "s.cfg")); })
                  .find("s.cfg:3"),
              std::string::npos);
    EXPECT_NE(error_of([] {
                  build_config(parse_settings("problem = burgers\nd = 50\nridge_lambda = 0\nsweep_N = 10\nsweep_M = 20\n",
                                              "s.cfg"));
              }).find("sweep_M"),
              std::string::npos);
}

TEST(Config, ParseConfigReadsFiles) {
    const auto path = std::filesystem::temp_directory_path() / "fbllr_cfg_test.cfg";
    {
        std::ofstream out(path);
        out << "problem = linear_heat\nd = 2\nN = 7\n";
    }
    const ParsedConfig cfg = parse_config(path.string(), {"M=33"});
    EXPECT_EQ(cfg.solver.N, 7u);
    EXPECT_EQ(cfg.solver.M, 33u);
    EXPECT_THROW(parse_config("/nonexistent/x.cfg"), ConfigError);
}
