#include "cascade/pair_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cascade/errors.hpp"

namespace cascade {

double SelectionCriterion::baseline_accuracy() const noexcept {
    return baseline_total ? static_cast<double>(baseline_correct) / static_cast<double>(baseline_total) : 0.0;
}

bool SelectionCriterion::feasible(const CascadePoint& point) const {
    if (point.n_rows <= 0 || baseline_total <= 0) return false;
    // correct/n >= bc/bt - tol  <=>  correct*bt - bc*n >= -tol*n*bt
    // Exact in 64 bits for datasets up to ~3e9 rows.
    const std::int64_t lhs = point.n_correct * baseline_total - baseline_correct * point.n_rows;
    if (tolerance == 0.0) return lhs >= 0;
    const long double rhs = -static_cast<long double>(tolerance) * static_cast<long double>(point.n_rows) *
                            static_cast<long double>(baseline_total);
    return static_cast<long double>(lhs) >= rhs;
}

SelectionCriterion SelectionCriterion::from_model(const AlignedRecordSet& aligned, const std::string& big,
                                                  double tolerance) {
    if (!std::isfinite(tolerance)) throw ConfigError("tolerance must be finite");
    const auto idx = aligned.find_model(big);
    if (idx == AlignedRecordSet::npos) throw ConfigError("model '" + big + "' not in aligned set");
    return {aligned.correct_count(idx), static_cast<std::int64_t>(aligned.row_count()), tolerance};
}

namespace {

double reduction(double expected_macs, double big_macs) { return 1.0 - expected_macs / big_macs; }

SelectionResult make_result(std::span<const ModelProfile> chain, const CascadePoint& point, std::size_t index,
                            bool feasible) {
    SelectionResult r;
    r.config.chain.assign(chain.begin(), chain.end());
    r.config.thresholds = point.thresholds;
    r.point = point;
    r.index = index;
    r.feasible = feasible;
    r.macs_reduction = reduction(point.expected_macs, chain.back().macs_per_sample);
    r.replacement = feasible && !point.stage_counts.empty() && point.stage_counts.front() == point.n_rows;
    return r;
}

}  // namespace

SelectionResult select_first_feasible(std::span<const CascadePoint> points, std::span<const ModelProfile> chain,
                                      const SelectionCriterion& criterion) {
    if (points.empty()) throw ConfigError("cannot select from an empty curve");
    if (chain.size() < 2) throw ConfigError("selection needs a chain of at least 2 models");
    for (std::size_t i = 0; i < points.size(); ++i)
        if (criterion.feasible(points[i])) return make_result(chain, points[i], i, true);

    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].n_correct * points[best].n_rows > points[best].n_correct * points[i].n_rows) best = i;
    return make_result(chain, points[best], best, false);
}

SelectionResult select_threshold(const TradeoffCurve& curve, const SelectionCriterion& criterion) {
    const ModelProfile chain[2] = {curve.little, curve.big};
    return select_first_feasible(curve.points, chain, criterion);
}

SelectionResult select_kpass(std::span<const CascadePoint> points, std::span<const ModelProfile> chain,
                             const SelectionCriterion& criterion) {
    if (points.empty()) throw ConfigError("cannot select from an empty point set");
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return points[a].expected_macs < points[b].expected_macs;
    });
    std::vector<CascadePoint> sorted;
    sorted.reserve(points.size());
    for (auto i : order) sorted.push_back(points[i]);
    auto r = select_first_feasible(sorted, chain, criterion);
    r.index = order[r.index];
    return r;
}

std::vector<std::size_t> pareto_front_indices(std::span<const CascadePoint> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].expected_macs != points[b].expected_macs)
            return points[a].expected_macs < points[b].expected_macs;
        return points[a].accuracy > points[b].accuracy;
    });

    std::vector<std::size_t> front;
    bool have_best = false;
    double best_cheaper = 0.0;  // best accuracy among strictly cheaper points
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        const double macs = points[order[g]].expected_macs;
        while (end < order.size() && points[order[end]].expected_macs == macs) ++end;
        // Within a cost group only the most accurate points can survive.
        const double top = points[order[g]].accuracy;
        if (!have_best || top > best_cheaper) {
            for (std::size_t i = g; i < end && points[order[i]].accuracy == top; ++i) front.push_back(order[i]);
        }
        if (!have_best || top > best_cheaper) best_cheaper = top;
        have_best = true;
        g = end;
    }
    return front;
}

std::vector<CascadePoint> pareto_front(std::span<const CascadePoint> points) {
    std::vector<CascadePoint> out;
    for (auto i : pareto_front_indices(points)) out.push_back(points[i]);
    return out;
}

Dispersion dispersion(std::span<const double> values) {
    if (values.empty()) return {};
    const auto n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

namespace {

DatasetOutcome outcome_on(const CascadeConfig& config, const AlignedRecordSet& set) {
    DatasetOutcome o;
    o.dataset_name = set.dataset_name();
    o.point = evaluate(set, config);
    const auto big = set.find_model(config.chain.back().name);
    o.big_accuracy = set.accuracy(big);
    o.accuracy_delta = o.point.accuracy - o.big_accuracy;
    o.macs_reduction = reduction(o.point.expected_macs, config.chain.back().macs_per_sample);
    return o;
}

}  // namespace

GeneralizationReport cross_evaluate(const CascadeConfig& config, const AlignedRecordSet& tuning,
                                    std::span<const AlignedRecordSet* const> targets) {
    GeneralizationReport report;
    report.config = config;
    report.datasets.push_back(outcome_on(config, tuning));
    for (const auto* t : targets) report.datasets.push_back(outcome_on(config, *t));

    std::vector<double> deltas, reductions;
    for (const auto& d : report.datasets) {
        deltas.push_back(d.accuracy_delta);
        reductions.push_back(d.macs_reduction);
    }
    report.accuracy_delta = dispersion(deltas);
    report.macs_reduction = dispersion(reductions);
    return report;
}

RobustnessReport threshold_robustness(std::span<const ModelProfile> chain,
                                      std::span<const AlignedRecordSet* const> tuning_sets,
                                      const AlignedRecordSet& reference, std::span<const double> grid,
                                      double tolerance) {
    if (chain.size() != 2) throw ConfigError("threshold_robustness takes a 2-model chain");
    RobustnessReport report;
    std::vector<double> deltas, reductions;
    for (const auto* set : tuning_sets) {
        const auto curve = sweep(*set, chain, grid);
        const auto criterion = SelectionCriterion::from_model(*set, chain[1].name, tolerance);
        RobustnessEntry e;
        e.tuned_on = set->dataset_name();
        e.selection = select_threshold(curve, criterion);
        e.on_reference = outcome_on(e.selection.config, reference);
        deltas.push_back(e.on_reference.accuracy_delta);
        reductions.push_back(e.on_reference.macs_reduction);
        report.entries.push_back(std::move(e));
    }
    report.accuracy_delta = dispersion(deltas);
    report.macs_reduction = dispersion(reductions);
    return report;
}

}  // namespace cascade
