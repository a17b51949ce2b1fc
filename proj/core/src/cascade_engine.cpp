#include "cascade/cascade_engine.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/errors.hpp"
#include "parallel.hpp"

namespace cascade {

void CascadeConfig::validate() const {
    if (chain.size() < 2) throw ConfigError("cascade needs at least 2 models, got " + std::to_string(chain.size()));
    if (thresholds.size() + 1 != chain.size()) {
        throw ConfigError("cascade of " + std::to_string(chain.size()) + " models needs " +
                          std::to_string(chain.size() - 1) + " thresholds, got " +
                          std::to_string(thresholds.size()));
    }
    for (double t : thresholds)
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("threshold " + std::to_string(t) + " outside [0,1]");
}

std::string CascadeConfig::chain_label() const {
    std::string out;
    for (const auto& m : chain) {
        if (!out.empty()) out += '+';
        out += m.name;
    }
    return out;
}

double CascadePoint::forwarded_fraction() const noexcept {
    if (n_rows == 0 || stage_counts.empty()) return 0.0;
    return static_cast<double>(n_rows - stage_counts.front()) / static_cast<double>(n_rows);
}

std::size_t route_stage(std::span<const double> confidences, std::span<const double> thresholds) noexcept {
    const auto k = confidences.size();
    for (std::size_t s = 0; s < k; ++s)
        if (stage_answers(s, k, confidences[s], thresholds)) return s;
    return k == 0 ? 0 : k - 1;
}

std::vector<std::size_t> resolve_chain(const AlignedRecordSet& aligned, const CascadeConfig& config) {
    config.validate();
    std::vector<std::size_t> columns;
    columns.reserve(config.chain.size());
    for (const auto& m : config.chain) {
        const auto idx = aligned.find_model(m.name);
        if (idx == AlignedRecordSet::npos)
            throw ConfigError("model '" + m.name + "' not in aligned set for dataset '" + aligned.dataset_name() + "'");
        if (aligned.models()[idx].macs_per_sample != m.macs_per_sample)
            throw ConfigError("profile of '" + m.name + "' disagrees with the aligned set's profile");
        columns.push_back(idx);
    }
    return columns;
}

Routing route(const AlignedRecordSet& aligned, std::span<const std::size_t> columns, std::size_t row,
              std::span<const double> thresholds) {
    const auto k = columns.size();
    for (std::size_t s = 0; s < k; ++s) {
        if (stage_answers(s, k, aligned.confidence(columns[s])[row], thresholds))
            return {s, aligned.predicted(columns[s])[row]};
    }
    return {k - 1, aligned.predicted(columns[k - 1])[row]};
}

Routing route(const AlignedRecordSet& aligned, std::size_t row, const CascadeConfig& config) {
    const auto columns = resolve_chain(aligned, config);
    return route(aligned, columns, row, config.thresholds);
}

namespace {

CascadePoint evaluate_columns(const AlignedRecordSet& aligned, std::span<const std::size_t> columns,
                              std::span<const ModelProfile> chain, std::span<const double> thresholds) {
    const auto k = columns.size();
    const auto n = aligned.row_count();
    const auto truth = aligned.true_labels();

    std::vector<std::span<const double>> conf(k);
    std::vector<std::span<const Label>> pred(k);
    for (std::size_t s = 0; s < k; ++s) {
        conf[s] = aligned.confidence(columns[s]);
        pred[s] = aligned.predicted(columns[s]);
    }

    CascadePoint p;
    p.thresholds.assign(thresholds.begin(), thresholds.end());
    p.n_rows = static_cast<std::int64_t>(n);
    p.stage_counts.assign(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t s = 0;
        while (!stage_answers(s, k, conf[s][i], thresholds)) ++s;
        ++p.stage_counts[s];
        p.n_correct += pred[s][i] == truth[i];
    }

    const auto rows = static_cast<double>(n);
    p.accuracy = n ? static_cast<double>(p.n_correct) / rows : 0.0;
    p.stage_fractions.resize(k);
    for (std::size_t s = 0; s < k; ++s) p.stage_fractions[s] = n ? static_cast<double>(p.stage_counts[s]) / rows : 0.0;

    p.expected_macs = expected_macs_from_counts(chain, p.stage_counts);
    return p;
}

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw ConfigError("threshold grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ConfigError("grid value outside [0,1]");
        if (i && grid[i] < grid[i - 1]) throw ConfigError("grid must be sorted ascending");
    }
}

}  // namespace

double expected_macs_from_counts(std::span<const ModelProfile> chain, std::span<const std::int64_t> stage_counts) {
    if (chain.empty() || chain.size() != stage_counts.size()) throw ConfigError("stage count / chain size mismatch");
    std::int64_t total = 0;
    for (auto c : stage_counts) total += c;
    double macs = chain[0].macs_per_sample;
    if (total == 0) return macs;
    const auto rows = static_cast<double>(total);
    std::int64_t reached = total;
    for (std::size_t s = 1; s < chain.size(); ++s) {
        reached -= stage_counts[s - 1];
        macs += (static_cast<double>(reached) / rows) * chain[s].macs_per_sample;
    }
    return macs;
}

CascadePoint evaluate(const AlignedRecordSet& aligned, const CascadeConfig& config) {
    const auto columns = resolve_chain(aligned, config);
    return evaluate_columns(aligned, columns, config.chain, config.thresholds);
}

std::vector<double> default_grid(std::size_t count) {
    if (count == 0) throw ConfigError("grid size must be >= 1");
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(count);
    return grid;
}

TradeoffCurve sweep(const AlignedRecordSet& aligned, std::span<const ModelProfile> chain,
                    std::span<const double> grid, unsigned threads) {
    if (chain.size() != 2) throw ConfigError("sweep takes exactly 2 models");
    check_grid(grid);
    CascadeConfig probe{{chain.begin(), chain.end()}, {0.0}};
    const auto columns = resolve_chain(aligned, probe);

    TradeoffCurve curve;
    curve.little = chain[0];
    curve.big = chain[1];
    curve.points.resize(grid.size());
    detail::parallel_for(grid.size(), threads, [&](std::size_t i) {
        const double t = grid[i];
        curve.points[i] = evaluate_columns(aligned, columns, chain, std::span<const double>(&t, 1));
    });
    return curve;
}

std::vector<CascadePoint> sweep_kpass(const AlignedRecordSet& aligned, std::span<const ModelProfile> chain,
                                      std::span<const double> grid1, std::span<const double> grid2,
                                      unsigned threads) {
    if (chain.size() != 3) throw ConfigError("sweep_kpass takes exactly 3 models");
    check_grid(grid1);
    check_grid(grid2);
    CascadeConfig probe{{chain.begin(), chain.end()}, {0.0, 0.0}};
    const auto columns = resolve_chain(aligned, probe);

    std::vector<CascadePoint> points(grid1.size() * grid2.size());
    detail::parallel_for(points.size(), threads, [&](std::size_t idx) {
        const double t[2] = {grid1[idx / grid2.size()], grid2[idx % grid2.size()]};
        points[idx] = evaluate_columns(aligned, columns, chain, t);
    });
    return points;
}

double estimate_scaling_cost(const ScalingSpec& spec) {
    for (double r : {spec.h_ratio, spec.w_ratio, spec.l_ratio, spec.c_ratio})
        if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("scaling ratios must be positive and finite");
    return spec.c_ratio * spec.h_ratio * spec.h_ratio * spec.w_ratio * spec.w_ratio * spec.l_ratio;
}

}  // namespace cascade
