#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cascade/cascade_engine.hpp"
#include "cascade/hardness.hpp"
#include "cascade/pair_optimizer.hpp"
#include "cascade/runtime_executor.hpp"

namespace cascade {

// Every float is written fixed-point with six decimals so outputs diff cleanly.
std::string fixed6(double value);

std::string curve_header(std::size_t stages);
/// One row per point: thresholds, accuracy, expected GMACs, stage fractions.
/// Three-stage points carry a `threshold2` column after `threshold`.
void write_curve_csv(std::ostream& out, std::span<const CascadePoint> points, std::size_t stages);

void write_calibration_csv(std::ostream& out, const std::vector<std::pair<std::string, std::vector<ConfidenceBinStats>>>& models);
void write_decomposition_csv(std::ostream& out, const MistakeDecomposition& decomposition);

/// One row of the optimizer's ranked table.
struct OptimizeRow {
    SelectionResult selection;
    double big_accuracy = 0.0;
};

void write_optimize_table(std::ostream& out, std::span<const OptimizeRow> rows);
void write_generalization_csv(std::ostream& out, std::span<const GeneralizationReport> reports);
void write_robustness_csv(std::ostream& out, const std::string& chain, const RobustnessReport& report);

void write_execution_csv(std::ostream& out, const ExecutionReport& report);
void write_execution_summary(std::ostream& out, const ExecutionReport& report, const CascadeConfig& config);

/// A parsed tradeoff-curve file.
struct CurveTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads a curve CSV, checking the header against the curve schema. Throws
/// FormatError naming the first unexpected column.
CurveTable read_curve_csv(std::istream& in, const std::string& source_name);

/// Long-format merge keyed by pair: header `pair,<curve columns>`. All tables
/// must share one schema.
void write_merged_curves(std::ostream& out, std::span<const std::pair<std::string, CurveTable>> curves);

}  // namespace cascade
