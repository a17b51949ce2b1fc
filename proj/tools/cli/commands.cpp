#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "cascade/cascade_engine.hpp"
#include "cascade/csv_output.hpp"
#include "cascade/errors.hpp"
#include "cascade/hardness.hpp"
#include "cascade/manifest.hpp"
#include "cascade/pair_optimizer.hpp"
#include "cascade/record_store.hpp"
#include "cascade/runtime_executor.hpp"
#include "cli.hpp"

namespace cascade::cli {

namespace fs = std::filesystem;

namespace {

Manifest require_manifest(const GlobalOptions& g) {
    if (g.manifest.empty()) throw ConfigError("--manifest is required");
    return load_manifest(g.manifest);
}

const DatasetEntry& pick_dataset(const Manifest& m, const GlobalOptions& g) {
    return g.dataset.empty() ? m.tuning() : m.dataset(g.dataset);
}

std::size_t model_index(const AlignedRecordSet& aligned, const std::string& name) {
    const auto idx = aligned.find_model(name);
    if (idx == AlignedRecordSet::npos) {
        std::string known;
        for (const auto& m : aligned.models()) known += (known.empty() ? "" : ", ") + m.name;
        throw ConfigError("unknown model '" + name + "' (manifest has: " + known + ")");
    }
    return idx;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    body(f);
    if (!f) throw Error("write failed: " + path.string());
    spdlog::info("wrote {}", path.string());
}

std::vector<double> parse_number_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = text.find(',', start);
        const auto field = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        double v = 0.0;
        auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || ec != std::errc() || p != field.data() + field.size())
            throw ConfigError(std::string("bad ") + what + " value '" + field + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string thresholds_text(const std::vector<double>& t) {
    std::string s;
    for (double v : t) s += (s.empty() ? "" : ",") + fixed6(v);
    return s;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    const bool is_count = !text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (is_count) {
        std::size_t n = 0;
        std::from_chars(text.data(), text.data() + text.size(), n);
        if (n == 0) throw ConfigError("--grid count must be >= 1");
        return default_grid(n);
    }
    auto grid = parse_number_list(text, "--grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ConfigError("--grid values must lie in [0,1]");
        if (i && grid[i] < grid[i - 1]) throw ConfigError("--grid values must be sorted ascending");
    }
    return grid;
}

std::vector<double> parse_thresholds(const std::string& text) {
    auto t = parse_number_list(text, "--threshold");
    for (double v : t)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("--threshold values must lie in [0,1]");
    return t;
}

int cmd_analyze(const GlobalOptions& g, const AnalyzeOptions& o, std::ostream& out) {
    const auto manifest = require_manifest(g);
    const auto aligned = load_aligned(pick_dataset(manifest, g));
    const std::size_t cols[2] = {model_index(aligned, o.little), model_index(aligned, o.big)};
    const auto pair = aligned.select_models(cols);

    std::vector<std::pair<std::string, std::vector<ConfidenceBinStats>>> calibration;
    for (std::size_t m = 0; m < 2; ++m) {
        calibration.emplace_back(pair.models()[m].name,
                                 bin_by_confidence(pair.confidence(m), pair.predicted(m), pair.true_labels(), o.bins));
    }
    const auto decomposition = decompose_mistakes(pair, o.bins);

    write_file(g.out_dir / "calibration.csv", [&](std::ostream& f) { write_calibration_csv(f, calibration); });
    write_file(g.out_dir / "decomposition.csv", [&](std::ostream& f) { write_decomposition_csv(f, decomposition); });

    out << "dataset: " << pair.dataset_name() << " (" << pair.row_count() << " samples)\n";
    out << "little: " << o.little << "  big: " << o.big << '\n';
    out << "little mistakes: " << decomposition.total_mistakes() << "  correctable: " << decomposition.total_correctable
        << "  non-correctable: " << decomposition.total_non_correctable << '\n';
    if (decomposition.no_mistakes) {
        out << "little model made no mistakes; no correctable-mistake statistics\n";
    } else if (const auto mean = decomposition.mean_correctable_confidence()) {
        out << "mean correctable-mistake confidence: " << fixed6(*mean) << '\n';
        out << "q" << fixed6(o.quantile) << " correctable-mistake confidence: "
            << fixed6(*decomposition.correctable_quantile(o.quantile)) << '\n';
    } else {
        out << "no correctable mistakes\n";
    }
    return kOk;
}

int cmd_sweep(const GlobalOptions& g, const SweepOptions& o, std::ostream& out) {
    if (o.chain.size() != 2 && o.chain.size() != 3) throw ConfigError("--chain takes 2 or 3 model names");
    const auto manifest = require_manifest(g);
    const auto aligned = load_aligned(pick_dataset(manifest, g));
    std::vector<ModelProfile> chain;
    for (const auto& name : o.chain) chain.push_back(aligned.models()[model_index(aligned, name)]);
    const auto grid = parse_grid(g.grid);

    std::vector<CascadePoint> points;
    if (chain.size() == 2) points = sweep(aligned, chain, grid).points;
    else points = sweep_kpass(aligned, chain, grid, grid);

    fs::path path = o.out;
    if (path.empty()) {
        std::string stem = "curve";
        for (const auto& name : o.chain) stem += (stem == "curve" ? "_" : "__") + name;
        path = g.out_dir / (stem + ".csv");
    }
    write_file(path, [&](std::ostream& f) { write_curve_csv(f, points, chain.size()); });
    out << path.string() << '\n';
    return kOk;
}

int cmd_optimize(const GlobalOptions& g, const OptimizeOptions& o, std::ostream& out) {
    const auto manifest = require_manifest(g);
    const auto& tuning_entry = pick_dataset(manifest, g);
    const auto tuning = load_aligned(tuning_entry);
    const auto grid = parse_grid(g.grid);
    const auto& models = tuning.models();

    std::vector<std::size_t> by_cost(models.size());
    std::iota(by_cost.begin(), by_cost.end(), std::size_t{0});
    std::stable_sort(by_cost.begin(), by_cost.end(),
                     [&](std::size_t a, std::size_t b) { return models[a].macs_per_sample < models[b].macs_per_sample; });
    auto cheaper = [&](std::size_t a, std::size_t b) { return models[a].macs_per_sample < models[b].macs_per_sample; };

    std::vector<OptimizeRow> rows;
    for (std::size_t i = 0; i < by_cost.size(); ++i) {
        for (std::size_t j = i + 1; j < by_cost.size(); ++j) {
            const auto li = by_cost[i], bi = by_cost[j];
            if (!cheaper(li, bi)) continue;
            const ModelProfile chain[2] = {models[li], models[bi]};
            const auto curve = sweep(tuning, chain, grid);
            const auto criterion = SelectionCriterion::from_model(tuning, models[bi].name, o.tolerance);
            rows.push_back({select_threshold(curve, criterion), tuning.accuracy(bi)});
            spdlog::debug("{}: T={} feasible={}", rows.back().selection.config.chain_label(),
                          thresholds_text(rows.back().selection.config.thresholds), rows.back().selection.feasible);
        }
    }
    if (o.kpass) {
        for (std::size_t i = 0; i < by_cost.size(); ++i)
            for (std::size_t j = i + 1; j < by_cost.size(); ++j)
                for (std::size_t l = j + 1; l < by_cost.size(); ++l) {
                    const auto a = by_cost[i], b = by_cost[j], c = by_cost[l];
                    if (!cheaper(a, b) || !cheaper(b, c)) continue;
                    const ModelProfile chain[3] = {models[a], models[b], models[c]};
                    const auto points = sweep_kpass(tuning, chain, grid, grid);
                    const auto criterion = SelectionCriterion::from_model(tuning, models[c].name, o.tolerance);
                    rows.push_back({select_kpass(points, chain, criterion), tuning.accuracy(c)});
                }
    }
    if (rows.empty()) throw ConfigError("no model pair with distinct costs to optimize");

    std::stable_sort(rows.begin(), rows.end(), [](const OptimizeRow& x, const OptimizeRow& y) {
        const auto& a = x.selection;
        const auto& b = y.selection;
        if (a.feasible != b.feasible) return a.feasible;
        if (a.point.expected_macs != b.point.expected_macs) return a.point.expected_macs < b.point.expected_macs;
        return a.config.chain_label() < b.config.chain_label();
    });

    write_file(g.out_dir / "optimize.csv", [&](std::ostream& f) { write_optimize_table(f, rows); });
    write_optimize_table(out, rows);

    const auto target_entries = g.dataset.empty() ? manifest.targets() : [&] {
        std::vector<const DatasetEntry*> t;
        for (const auto& d : manifest.datasets)
            if (&d != &tuning_entry) t.push_back(&d);
        return t;
    }();
    if (target_entries.empty()) return kOk;

    std::vector<AlignedRecordSet> targets;
    for (const auto* t : target_entries) targets.push_back(load_aligned(*t));
    std::vector<const AlignedRecordSet*> target_ptrs;
    for (const auto& t : targets) target_ptrs.push_back(&t);
    std::vector<const AlignedRecordSet*> all_sets{&tuning};
    all_sets.insert(all_sets.end(), target_ptrs.begin(), target_ptrs.end());

    std::vector<GeneralizationReport> reports;
    for (const auto& r : rows)
        if (r.selection.feasible) reports.push_back(cross_evaluate(r.selection.config, tuning, target_ptrs));
    write_file(g.out_dir / "generalization.csv", [&](std::ostream& f) { write_generalization_csv(f, reports); });

    write_file(g.out_dir / "robustness.csv", [&](std::ostream& f) {
        bool header = true;
        for (const auto& r : rows) {
            if (!r.selection.feasible || r.selection.config.stages() != 2) continue;
            const auto rep = threshold_robustness(r.selection.config.chain, all_sets, tuning, grid, o.tolerance);
            std::ostringstream block;
            write_robustness_csv(block, r.selection.config.chain_label(), rep);
            auto text = block.str();
            if (!header) text.erase(0, text.find('\n') + 1);
            header = false;
            f << text;
        }
        if (header) f << "chain,tuned_on,thresholds,reference,delta_acc_pt,reduction_pct\n";
    });
    return kOk;
}

namespace {

struct StageBinding {
    ModelProfile profile;
    RunnerSpec runner;
    fs::path records;  // manifest record file of this model
};

std::vector<Sample> read_samples(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open samples file " + path.string());
    std::vector<Sample> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream ls(line);
        Sample s;
        ls >> s.id;
        if (!(ls >> s.payload)) s.payload = "-";
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace

int cmd_execute(const GlobalOptions& g, const ExecuteOptions& o, std::ostream& out) {
    const auto manifest = require_manifest(g);
    const auto& dataset = pick_dataset(manifest, g);
    const auto policy = parse_memory_policy(o.policy);
    if (!policy) throw ConfigError("--policy must be resident or swap");

    std::ifstream cf(o.config);
    if (!cf) throw ConfigError("cannot open execution config " + o.config.string());
    nlohmann::json j;
    try {
        cf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(o.config.string() + ": invalid JSON: " + e.what());
    }
    const auto base = o.config.parent_path();
    auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base / p; };

    const auto profiles = load_profiles(dataset);
    std::vector<StageBinding> stages;
    std::optional<fs::path> samples_file;
    try {
        for (const auto& js : j.at("stages")) {
            const auto name = js.at("model").get<std::string>();
            auto it = std::find_if(profiles.begin(), profiles.end(), [&](const ModelProfile& p) { return p.name == name; });
            if (it == profiles.end()) throw ConfigError("stage model '" + name + "' is not in the manifest");
            const auto& entry = dataset.entries[static_cast<std::size_t>(it - profiles.begin())];

            const auto& jr = js.at("runner");
            const auto kind = jr.at("kind").get<std::string>();
            StageBinding b{*it, ReplayRunnerSpec{entry.records, name}, entry.records};
            if (kind == "subprocess") {
                SubprocessRunnerSpec sp;
                sp.command = jr.at("command").get<std::vector<std::string>>();
                if (sp.command.empty()) throw ConfigError("empty runner command for '" + name + "'");
                if (sp.command[0].find('/') != std::string::npos) sp.command[0] = resolve(sp.command[0]).string();
                sp.working_dir = jr.contains("cwd") ? resolve(jr.at("cwd").get<std::string>()) : base;
                sp.startup_timeout_s = jr.value("startup_timeout_s", sp.startup_timeout_s);
                sp.response_timeout_s = jr.value("response_timeout_s", sp.response_timeout_s);
                b.runner = sp;
            } else if (kind != "replay") {
                throw ConfigError("unknown runner kind '" + kind + "'");
            }
            stages.push_back(std::move(b));
        }
        if (j.contains("samples")) samples_file = resolve(j.at("samples").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(o.config.string() + ": bad execution config: " + e.what());
    }

    CascadeConfig config;
    std::vector<RunnerSpec> runners;
    for (const auto& s : stages) {
        config.chain.push_back(s.profile);
        runners.push_back(s.runner);
    }
    config.thresholds = parse_thresholds(o.thresholds);
    config.validate();

    std::vector<Sample> samples;
    if (samples_file) {
        samples = read_samples(*samples_file);
    } else {
        for (const auto& r : load_record_set(stages.front().records, stages.front().profile).records)
            samples.push_back({r.sample_id, "-"});
    }
    if (o.limit > 0 && o.limit < samples.size()) {
        std::vector<std::size_t> idx(samples.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::mt19937_64 rng(g.seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(o.limit);
        std::sort(idx.begin(), idx.end());
        std::vector<Sample> subset;
        for (auto i : idx) subset.push_back(samples[i]);
        samples = std::move(subset);
    }

    const auto report = execute(samples, config, runners, *policy);

    auto summary_path = o.out;
    summary_path.replace_extension(".summary.csv");
    write_file(o.out, [&](std::ostream& f) { write_execution_csv(f, report); });
    write_file(summary_path, [&](std::ostream& f) { write_execution_summary(f, report, config); });

    out << "samples: " << report.outcomes.size() << "  policy: " << to_string(*policy) << '\n';
    for (std::size_t s = 0; s < config.stages(); ++s)
        out << "stage " << s << " (" << config.chain[s].name << "): answered " << report.stage_counts[s] << ", invoked "
            << report.stage_invocations[s] << '\n';
    out << "expected GMACs/sample: " << fixed6(report.expected_gmacs) << '\n';
    out << "wall time: " << report.wall_time.count() << " s\n";
    return kOk;
}

int cmd_report(const GlobalOptions& g, const ReportOptions& o, std::ostream& out) {
    if (o.curves.empty()) throw ConfigError("report needs at least one curve file");
    std::vector<std::pair<std::string, CurveTable>> tables;
    for (const auto& path : o.curves) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError(path.string(), 0, "cannot open curve file");
        auto key = path.stem().string();
        if (key.rfind("curve_", 0) == 0) key.erase(0, 6);
        tables.emplace_back(key, read_curve_csv(in, path.string()));
    }
    const auto path = o.out.empty() ? g.out_dir / "report.csv" : o.out;
    write_file(path, [&](std::ostream& f) { write_merged_curves(f, tables); });
    out << path.string() << '\n';
    return kOk;
}

}  // namespace cascade::cli
