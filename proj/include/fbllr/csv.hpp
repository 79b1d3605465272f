#pragma once

#include <string>
#include <vector>

#include "fbllr/backward.hpp"
#include "fbllr/harness.hpp"

namespace fbllr {

/// %.17g, enough to round-trip any double.
std::string format_double(double v);

/// Column header shared by run and sweep CSVs (no trailing newline).
const std::string& csv_header();

std::string csv_row(const RunReport& report);
std::string csv_row(const SweepResult& result, const SweepRow& row);

/// Header plus one row per run. LF line endings. I/O errors name the path.
void emit_csv(const RunReport& report, const std::string& path);
void emit_csv(const SweepResult& result, const std::string& path);

/// Columns dt, mean_abs_err, mean_rel_err, M; one row per seed-averaged point.
void emit_plot_csv(const SweepResult& result, const std::string& path);

/// Runtime grid: N, M, runtime_s, forward_s, backward_s, status.
void emit_scaling_csv(const ScalingReport& report, const std::string& path);

/// Splits one CSV line on commas (fields never contain commas or quotes).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace fbllr
