#include "fbllr/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fbllr/error.hpp"

namespace fbllr {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::string& csv_header() {
    static const std::string header =
        "problem,d,T,N,M,seed,Y0,ref,abs_err,rel_err,runtime_s,mean_cg_iters,mean_newton_iters,status";
    return header;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string row(const std::string& problem, std::size_t d, double T, std::size_t N, std::size_t M,
                std::uint64_t seed, double y0, const std::optional<double>& ref, const std::optional<double>& abs_err,
                const std::optional<double>& rel_err, double runtime, double cg, double newton,
                const std::string& status) {
    std::ostringstream out;
    out << problem << ',' << d << ',' << format_double(T) << ',' << N << ',' << M << ',' << seed << ','
        << format_double(y0) << ',' << opt(ref) << ',' << opt(abs_err) << ',' << opt(rel_err) << ','
        << format_double(runtime) << ',' << format_double(cg) << ',' << format_double(newton) << ',' << status;
    return out.str();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace

std::string csv_row(const RunReport& r) {
    return row(r.problem, r.d, r.T, r.N, r.M, r.seed, r.y0, r.reference, r.abs_err, r.rel_err, r.runtime_s,
               r.mean_cg_iters, r.mean_newton_iters, r.status());
}

std::string csv_row(const SweepResult& s, const SweepRow& r) {
    return row(s.problem, s.d, s.T, r.N, r.M, r.seed, r.y0, r.reference, r.abs_err, r.rel_err, r.runtime_s,
               r.mean_cg_iters, r.mean_newton_iters, r.status);
}

void emit_csv(const RunReport& report, const std::string& path) {
    auto out = open_out(path);
    out << csv_header() << '\n' << csv_row(report) << '\n';
    finish(out, path);
}

void emit_csv(const SweepResult& result, const std::string& path) {
    auto out = open_out(path);
    out << csv_header() << '\n';
    for (const auto& r : result.rows) out << csv_row(result, r) << '\n';
    finish(out, path);
}

void emit_plot_csv(const SweepResult& result, const std::string& path) {
    auto out = open_out(path);
    out << "dt,mean_abs_err,mean_rel_err,M\n";
    for (const auto& p : result.points) {
        out << format_double(p.dt) << ',' << format_double(p.mean_abs_err) << ',' << format_double(p.mean_rel_err)
            << ',' << p.M << '\n';
    }
    finish(out, path);
}

void emit_scaling_csv(const ScalingReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "N,M,runtime_s,forward_s,backward_s,status\n";
    for (const auto& r : report.rows) {
        out << r.N << ',' << r.M << ',' << format_double(r.runtime_s) << ',' << format_double(r.forward_s) << ','
            << format_double(r.backward_s) << ',' << r.status << '\n';
    }
    finish(out, path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace fbllr
