#pragma once

#include "caprob/config.h"
#include "caprob/sweeps.h"

#include <Eigen/Dense>

#include <filesystem>
#include <ostream>
#include <string>

namespace caprob {

struct FeatureDump {
  std::string label;
  Eigen::MatrixXd values;  // n x d
};

/// CSV: header line "n,d,label", then n rows of d comma-separated numbers.
FeatureDump read_feature_dump(const std::filesystem::path& path);
FeatureDump parse_feature_dump(const std::string& text);

/// Values are written with 17 significant digits, so reading back is exact.
void write_feature_dump(const std::filesystem::path& path, const FeatureDump& dump);

inline constexpr const char* kCellsSchema = "caprob-cells/1";

/// One row per (cell, slack source); cells without slack records get one
/// row with empty term columns. Extras follow as "x_<name>" columns.
void write_cells_csv(std::ostream& out, const SweepResult& result);

void write_summary_md(std::ostream& out, const SweepResult& result, const RunConfig& config);

/// "<command>-<16 hex digits of the config hash>".
std::string run_id(const RunConfig& config);

/// Writes <out>/<run-id>/{cells.csv, summary.md, effective-config.json} and
/// returns the run directory. Throws IoError.
std::filesystem::path emit_results(const SweepResult& result, const RunConfig& config);

}  // namespace caprob
