#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cascade::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

struct GlobalOptions {
    std::filesystem::path manifest;
    std::filesystem::path out_dir = ".";
    std::string grid = "50";
    std::uint64_t seed = 0;
    std::string dataset;  // empty: the manifest's tuning dataset
};

struct AnalyzeOptions {
    std::string little;
    std::string big;
    std::size_t bins = 10;
    double quantile = 0.9;
};

struct SweepOptions {
    std::vector<std::string> chain;
    std::filesystem::path out;  // empty: <out-dir>/curve_<little>__<big>.csv
};

struct OptimizeOptions {
    double tolerance = 0.0;
    bool kpass = false;
};

struct ExecuteOptions {
    std::filesystem::path config;
    std::string thresholds;
    std::string policy = "resident";
    std::filesystem::path out;
    std::size_t limit = 0;  // 0: every sample
};

struct ReportOptions {
    std::vector<std::filesystem::path> curves;
    std::filesystem::path out;  // empty: <out-dir>/report.csv
};

/// Parses a --grid value: a count n (k/n for k < n) or a comma list.
std::vector<double> parse_grid(const std::string& text);
std::vector<double> parse_thresholds(const std::string& text);

int cmd_analyze(const GlobalOptions& g, const AnalyzeOptions& o, std::ostream& out);
int cmd_sweep(const GlobalOptions& g, const SweepOptions& o, std::ostream& out);
int cmd_optimize(const GlobalOptions& g, const OptimizeOptions& o, std::ostream& out);
int cmd_execute(const GlobalOptions& g, const ExecuteOptions& o, std::ostream& out);
int cmd_report(const GlobalOptions& g, const ReportOptions& o, std::ostream& out);

/// Full command line entry point. Never throws; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cascade::cli
