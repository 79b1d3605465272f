#include "fbllr/config_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fbllr/csv.hpp"
#include "fbllr/error.hpp"

namespace fbllr {
namespace {

const std::vector<std::string> kProblemKeys = {"T", "x0", "nu", "theta", "theta_c", "kappa", "sigma", "beta",
                                                "a", "b"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& where, const std::string& what) {
    throw ConfigError(where + ": key '" + key + "': " + what);
}

double to_double(const std::string& key, const std::string& v, const std::string& where) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || !std::isfinite(out)) bad(key, where, "expected a number, got '" + v + "'");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v, const std::string& where) {
    unsigned long long out = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) bad(key, where, "expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(out);
}

bool to_bool(const std::string& key, const std::string& v, const std::string& where) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad(key, where, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) out.push_back(trim(cur));
    return out;
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& v, const std::string& where) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v)) out.push_back(to_size(key, item, where));
    if (out.empty()) bad(key, where, "empty list");
    return out;
}

void apply(RunSettings& s, const std::string& key, const std::string& v, const std::string& where) {
    SolverConfig& c = s.solver;
    if (key == "problem") {
        if (v.empty()) bad(key, where, "empty problem name");
        s.problem = v;
    } else if (key == "d") {
        s.d = to_size(key, v, where);
        if (s.d < 1) bad(key, where, "must be >= 1");
    } else if (key == "N") {
        c.N = to_size(key, v, where);
    } else if (key == "M") {
        c.M = to_size(key, v, where);
    } else if (key == "seed") {
        unsigned long long out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size()) bad(key, where, "expected an unsigned integer");
        c.seed = out;
    } else if (key == "kernel") {
        if (v == "gaussian") c.kernel.kind = KernelKind::Gaussian;
        else if (v == "epanechnikov") c.kernel.kind = KernelKind::Epanechnikov;
        else bad(key, where, "expected gaussian or epanechnikov, got '" + v + "'");
    } else if (key == "bandwidth_rule") {
        if (v == "max_distance") c.bandwidth.kind = BandwidthKind::MaxDistance;
        else if (v == "scaled_sqrt_dt") c.bandwidth.kind = BandwidthKind::ScaledSqrtDt;
        else if (v == "fixed") c.bandwidth.kind = BandwidthKind::Fixed;
        else bad(key, where, "expected max_distance, scaled_sqrt_dt or fixed, got '" + v + "'");
    } else if (key == "bandwidth_c") {
        c.bandwidth.value = to_double(key, v, where);
    } else if (key == "ridge_lambda") {
        if (v == "auto") c.ridge_lambda.reset();
        else c.ridge_lambda = to_double(key, v, where);
    } else if (key == "cg_tol") {
        c.cg_tol = to_double(key, v, where);
    } else if (key == "cg_maxiter") {
        if (v == "auto") c.cg_maxiter.reset();
        else c.cg_maxiter = static_cast<int>(to_size(key, v, where));
    } else if (key == "newton_tol") {
        c.newton.tol = to_double(key, v, where);
    } else if (key == "newton_maxiter") {
        c.newton.maxiter = static_cast<int>(to_size(key, v, where));
    } else if (key == "memory_budget_mb") {
        c.memory_budget_bytes = to_size(key, v, where) << 20;
    } else if (key == "checkpoint_stride") {
        if (v == "auto") c.checkpoint_stride.reset();
        else c.checkpoint_stride = to_size(key, v, where);
    } else if (key == "conditional_mean") {
        if (v == "global_mean") c.conditional_mean = ConditionalMean::GlobalMean;
        else if (v == "local_intercept") c.conditional_mean = ConditionalMean::LocalIntercept;
        else bad(key, where, "expected global_mean or local_intercept, got '" + v + "'");
    } else if (key == "skip_unused_gradient") {
        c.skip_unused_gradient = to_bool(key, v, where);
    } else if (key == "workers") {
        c.workers = to_size(key, v, where);
    } else if (key == "sweep_N") {
        s.sweep_N = to_size_list(key, v, where);
    } else if (key == "sweep_M") {
        s.sweep_M = to_size_list(key, v, where);
    } else if (key == "seeds_per_cell") {
        s.seeds_per_cell = to_size(key, v, where);
        if (s.seeds_per_cell < 1) bad(key, where, "must be >= 1");
    } else if (key == "reference") {
        if (v != "auto" && v != "exact" && v != "none") to_double(key, v, where);
        s.reference = v;
    } else if (key == "parallel_cells") {
        s.parallel_cells = to_bool(key, v, where);
    } else if (std::find(kProblemKeys.begin(), kProblemKeys.end(), key) != kProblemKeys.end()) {
        Vec vals;
        for (const auto& item : split_list(v)) vals.push_back(to_double(key, item, where));
        if (vals.empty()) bad(key, where, "empty value");
        s.params.set(key, vals);
    } else {
        throw ConfigError(where + ": unknown key '" + key + "'");
    }
    s.origin[key] = where;
}

std::string where_of(const RunSettings& s, const std::string& key) {
    auto it = s.origin.find(key);
    return it == s.origin.end() ? std::string("default") : it->second;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

}  // namespace

bool RunSettings::operator==(const RunSettings& o) const {
    return problem == o.problem && d == o.d && params == o.params && solver == o.solver && sweep_N == o.sweep_N &&
           sweep_M == o.sweep_M && seeds_per_cell == o.seeds_per_cell && reference == o.reference &&
           parallel_cells == o.parallel_cells;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k = {"problem",        "d",
                                      "N",              "M",
                                      "seed",           "kernel",
                                      "bandwidth_rule", "bandwidth_c",
                                      "ridge_lambda",   "cg_tol",
                                      "cg_maxiter",     "newton_tol",
                                      "newton_maxiter", "memory_budget_mb",
                                      "checkpoint_stride", "conditional_mean",
                                      "skip_unused_gradient", "workers",
                                      "sweep_N",        "sweep_M",
                                      "seeds_per_cell", "reference",
                                      "parallel_cells"};
        k.insert(k.end(), kProblemKeys.begin(), kProblemKeys.end());
        return k;
    }();
    return keys;
}

RunSettings parse_settings(const std::string& text, const std::string& source,
                           const std::vector<std::string>& overrides) {
    RunSettings s;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": missing key");
        if (!seen.insert(key).second) throw ConfigError(where + ": key '" + key + "' given twice");
        apply(s, key, value, where);
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("--set '" + ov + "': expected key=value");
        apply(s, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), "--set " + trim(ov.substr(0, eq)));
    }
    return s;
}

ParsedConfig build_config(const RunSettings& s) {
    if (s.problem.empty()) throw ConfigError("missing required key 'problem'");
    if (s.d == 0) throw ConfigError("missing required key 'd'");
    ParsedConfig out;
    out.settings = s;
    out.solver = s.solver;
    try {
        out.problem = builtin_problem(s.problem, s.d, s.params);
    } catch (const NotFound& e) {
        throw ConfigError(where_of(s, "problem") + ": key 'problem': " + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError("problem '" + s.problem + "': " + e.what());
    }
    try {
        out.solver.validate(s.d);
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        std::string key = "M";
        for (const char* k : {"ridge_lambda", "cg_tol", "cg_maxiter", "newton_tol", "newton_maxiter",
                              "checkpoint_stride", "N"}) {
            if (msg.find(k) != std::string::npos) {
                key = k;
                break;
            }
        }
        if (msg.find("ridge required") != std::string::npos) key = "ridge_lambda";
        if (msg.find("bandwidth") != std::string::npos) key = "bandwidth_c";
        throw ConfigError(where_of(s, key) + ": key '" + key + "': " + msg);
    }
    if (!s.sweep_N.empty()) {
        SweepPlan plan;
        plan.problem = s.problem;
        plan.d = s.d;
        plan.params = s.params;
        plan.N_values = s.sweep_N;
        plan.M_values = s.sweep_M.empty() ? std::vector<std::size_t>{s.solver.M} : s.sweep_M;
        plan.seeds_per_cell = s.seeds_per_cell;
        plan.parallel_cells = s.parallel_cells;
        if (s.reference == "none") {
            plan.reference = ReferenceSpec::none();
        } else if (s.reference == "exact") {
            plan.reference = ReferenceSpec::exact();
        } else if (s.reference == "auto") {
            plan.reference = reference_value(out.problem, 0.0, out.problem.query_point) ? ReferenceSpec::exact()
                                                                                          : ReferenceSpec::none();
        } else {
            plan.reference = ReferenceSpec::cited(std::stod(s.reference));
        }
        try {
            plan.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(where_of(s, "sweep_N") + ": " + e.what());
        }
        for (std::size_t M : plan.M_values) {
            SolverConfig probe = s.solver;
            probe.M = M;
            try {
                probe.validate(s.d);
            } catch (const ConfigError& e) {
                throw ConfigError(where_of(s, "sweep_M") + ": key 'sweep_M': " + e.what());
            }
        }
        out.sweep = plan;
    }
    return out;
}

ParsedConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return build_config(parse_settings(text.str(), path, overrides));
}

std::string serialize_config(const RunSettings& s) {
    const SolverConfig& c = s.solver;
    std::ostringstream out;
    out << "problem = " << s.problem << '\n' << "d = " << s.d << '\n';
    for (const auto& [key, vals] : s.params.values()) {
        out << key << " = ";
        for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << format_double(vals[i]);
        out << '\n';
    }
    out << "N = " << c.N << '\n'
        << "M = " << c.M << '\n'
        << "seed = " << c.seed << '\n'
        << "kernel = " << (c.kernel.kind == KernelKind::Gaussian ? "gaussian" : "epanechnikov") << '\n'
        << "bandwidth_rule = "
        << (c.bandwidth.kind == BandwidthKind::MaxDistance    ? "max_distance"
            : c.bandwidth.kind == BandwidthKind::ScaledSqrtDt ? "scaled_sqrt_dt"
                                                              : "fixed")
        << '\n'
        << "bandwidth_c = " << format_double(c.bandwidth.value) << '\n'
        << "ridge_lambda = " << (c.ridge_lambda ? format_double(*c.ridge_lambda) : "auto") << '\n'
        << "cg_tol = " << format_double(c.cg_tol) << '\n'
        << "cg_maxiter = " << (c.cg_maxiter ? std::to_string(*c.cg_maxiter) : "auto") << '\n'
        << "newton_tol = " << format_double(c.newton.tol) << '\n'
        << "newton_maxiter = " << c.newton.maxiter << '\n'
        << "memory_budget_mb = " << (c.memory_budget_bytes >> 20) << '\n'
        << "checkpoint_stride = " << (c.checkpoint_stride ? std::to_string(*c.checkpoint_stride) : "auto") << '\n'
        << "conditional_mean = "
        << (c.conditional_mean == ConditionalMean::GlobalMean ? "global_mean" : "local_intercept") << '\n'
        << "skip_unused_gradient = " << (c.skip_unused_gradient ? "true" : "false") << '\n'
        << "workers = " << c.workers << '\n';
    if (!s.sweep_N.empty()) out << "sweep_N = " << join(s.sweep_N) << '\n';
    if (!s.sweep_M.empty()) out << "sweep_M = " << join(s.sweep_M) << '\n';
    out << "seeds_per_cell = " << s.seeds_per_cell << '\n'
        << "reference = " << s.reference << '\n'
        << "parallel_cells = " << (s.parallel_cells ? "true" : "false") << '\n';
    return out.str();
}

}  // namespace fbllr
