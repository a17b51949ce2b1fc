#include "cli.hpp"

#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cascade/errors.hpp"

namespace cascade::cli {

namespace {

void configure_logging() {
    static bool done = false;
    if (done) return;
    done = true;
    auto logger = spdlog::stderr_color_mt("cascade-opt");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("CASCADE_OPT_LOG")) {
        const auto parsed = spdlog::level::from_str(level);
        // from_str maps unknown names to "off"; only honour it when asked for.
        if (parsed != spdlog::level::off || std::string_view(level) == "off") spdlog::set_level(parsed);
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    configure_logging();

    CLI::App app{"Analyze, optimize and execute confidence-gated classifier cascades", "cascade-opt"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--manifest", g.manifest, "Manifest binding model profiles to record files");
    app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
    app.add_option("--grid", g.grid, "Threshold grid: a count n (k/n, k<n) or a comma list")->capture_default_str();
    app.add_option("--seed", g.seed, "Seed for any subsampling")->capture_default_str();
    app.add_option("--dataset", g.dataset, "Dataset to work on (default: the tuning dataset)");

    AnalyzeOptions analyze;
    auto* a = app.add_subcommand("analyze", "Confidence calibration and mistake decomposition tables");
    a->add_option("--little", analyze.little, "Little model name")->required();
    a->add_option("--big", analyze.big, "Big model name")->required();
    a->add_option("--bins", analyze.bins, "Number of confidence bins")->capture_default_str()->check(CLI::PositiveNumber);
    a->add_option("--quantile", analyze.quantile, "Quantile of correctable-mistake confidence to report")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    SweepOptions sweep;
    auto* s = app.add_subcommand("sweep", "Accuracy/GMACs tradeoff curve over the threshold grid");
    s->add_option("--chain", sweep.chain, "Model names, cheapest first (2 or 3)")->required()->delimiter(',');
    s->add_option("--out", sweep.out, "Output CSV path");

    OptimizeOptions optimize;
    auto* o = app.add_subcommand("optimize", "Cheapest cascade per model pair meeting the accuracy target");
    o->add_option("--tolerance", optimize.tolerance, "Allowed accuracy loss vs the big model, as a fraction")
        ->capture_default_str();
    o->add_flag("--kpass", optimize.kpass, "Also search three-model cascades");

    ExecuteOptions execute;
    auto* e = app.add_subcommand("execute", "Run a cascade against model runners");
    e->add_option("--config", execute.config, "Execution config (JSON)")->required();
    e->add_option("--threshold", execute.thresholds, "T or T1,T2")->required();
    e->add_option("--policy", execute.policy, "resident|swap")
        ->capture_default_str()
        ->check(CLI::IsMember({"resident", "swap"}));
    e->add_option("--out", execute.out, "Per-sample report CSV")->required();
    e->add_option("--limit", execute.limit, "Random subset of this many samples (uses --seed)");

    ReportOptions report;
    auto* r = app.add_subcommand("report", "Merge tradeoff curves into one long-format CSV");
    r->add_option("curves", report.curves, "Curve CSV files")->required();
    r->add_option("--out", report.out, "Merged CSV path");

    for (auto* sub : {a, s, o, e, r}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*a) return cmd_analyze(g, analyze, out);
        if (*s) return cmd_sweep(g, sweep, out);
        if (*o) return cmd_optimize(g, optimize, out);
        if (*e) return cmd_execute(g, execute, out);
        if (*r) return cmd_report(g, report, out);
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return kUsageError;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    for (const auto& a : args) argv.push_back(a.c_str());
    argv.push_back(nullptr);
    return run(static_cast<int>(args.size()), argv.data(), out, err);
}

}  // namespace cascade::cli
