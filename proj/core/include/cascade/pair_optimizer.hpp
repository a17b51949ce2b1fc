#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cascade/cascade_engine.hpp"
#include "cascade/record_store.hpp"

namespace cascade {

/// Accuracy target: baseline minus tolerance. The baseline is kept as counts
/// so feasibility is decided exactly; tolerance is an accuracy fraction
/// (0.001 = 0.1 points), and 0 means no loss allowed.
struct SelectionCriterion {
    std::int64_t baseline_correct = 0;
    std::int64_t baseline_total = 1;
    double tolerance = 0.0;

    double baseline_accuracy() const noexcept;
    bool feasible(const CascadePoint& point) const;

    /// Baseline is `big`'s own accuracy on `aligned`.
    static SelectionCriterion from_model(const AlignedRecordSet& aligned, const std::string& big, double tolerance);
};

struct SelectionResult {
    CascadeConfig config;
    CascadePoint point;
    /// 1 - expected_macs / big_macs; negative when the cascade costs more.
    double macs_reduction = 0.0;
    bool feasible = false;
    /// Feasible without forwarding anything: the first model alone meets the
    /// target and can replace the last one.
    bool replacement = false;
    std::size_t index = 0;  // position of `point` in the scanned sequence
};

/// Leftmost feasible point of a threshold-ordered curve. On a monotone-cost
/// curve this is also the cheapest feasible point. When nothing is feasible,
/// `feasible` is false and `point` is the most accurate one (first on ties).
SelectionResult select_threshold(const TradeoffCurve& curve, const SelectionCriterion& criterion);

/// First feasible point of `points` taken in the given order.
SelectionResult select_first_feasible(std::span<const CascadePoint> points, std::span<const ModelProfile> chain,
                                      const SelectionCriterion& criterion);

/// K-pass selection: points ordered by expected_macs ascending (stable), then
/// the first feasible one.
SelectionResult select_kpass(std::span<const CascadePoint> points, std::span<const ModelProfile> chain,
                             const SelectionCriterion& criterion);

/// Indices of the non-dominated points, sorted by expected_macs ascending
/// (then input order). A point is dominated when another has accuracy >= and
/// macs <= with at least one strict.
std::vector<std::size_t> pareto_front_indices(std::span<const CascadePoint> points);
std::vector<CascadePoint> pareto_front(std::span<const CascadePoint> points);

struct DatasetOutcome {
    std::string dataset_name;
    CascadePoint point;
    double big_accuracy = 0.0;
    double accuracy_delta = 0.0;  // cascade - big, as a fraction
    double macs_reduction = 0.0;
};

struct Dispersion {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

Dispersion dispersion(std::span<const double> values);

struct GeneralizationReport {
    CascadeConfig config;
    std::vector<DatasetOutcome> datasets;  // tuning set first
    Dispersion accuracy_delta;
    Dispersion macs_reduction;
};

/// Evaluates a fixed configuration on the tuning set and on every target.
GeneralizationReport cross_evaluate(const CascadeConfig& config, const AlignedRecordSet& tuning,
                                    std::span<const AlignedRecordSet* const> targets);

struct RobustnessEntry {
    std::string tuned_on;
    SelectionResult selection;  // chosen on `tuned_on`
    DatasetOutcome on_reference;
};

struct RobustnessReport {
    std::vector<RobustnessEntry> entries;
    Dispersion accuracy_delta;
    Dispersion macs_reduction;
};

/// Chooses the threshold of a two-model chain separately on each tuning set
/// and evaluates every choice on `reference`.
RobustnessReport threshold_robustness(std::span<const ModelProfile> chain,
                                      std::span<const AlignedRecordSet* const> tuning_sets,
                                      const AlignedRecordSet& reference, std::span<const double> grid,
                                      double tolerance);

}  // namespace cascade
