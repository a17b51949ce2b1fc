#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cascade/record_store.hpp"

namespace cascade {

/// Ordered model chain, cheapest first, with one confidence gate between
/// consecutive stages. Stage i answers when its confidence >= thresholds[i];
/// the last stage answers unconditionally.
struct CascadeConfig {
    std::vector<ModelProfile> chain;
    std::vector<double> thresholds;

    std::size_t stages() const noexcept { return chain.size(); }
    /// Throws ConfigError unless K >= 2, |thresholds| == K-1 and each in [0, 1].
    void validate() const;
    std::string chain_label() const;  // "Little+Big"
};

/// Accuracy and cost of one cascade configuration over a dataset.
struct CascadePoint {
    std::vector<double> thresholds;
    std::int64_t n_rows = 0;
    std::int64_t n_correct = 0;
    double accuracy = 0.0;
    /// Average GMACs per sample; every stage a row reaches is charged.
    double expected_macs = 0.0;
    /// Rows answered at each stage.
    std::vector<std::int64_t> stage_counts;
    std::vector<double> stage_fractions;

    /// Fraction of rows that went past the first stage (|D*| / |D|).
    double forwarded_fraction() const noexcept;
};

struct TradeoffCurve {
    ModelProfile little;
    ModelProfile big;
    std::vector<CascadePoint> points;  // ordered by threshold
};

/// Ratios of a scaled model to its base: resolution, width, depth, and the
/// family coefficient.
struct ScalingSpec {
    double h_ratio = 1.0;
    double w_ratio = 1.0;
    double l_ratio = 1.0;
    double c_ratio = 1.0;
};

/// The gate. Ties stay at the earlier, cheaper stage.
inline bool stage_answers(std::size_t stage, std::size_t n_stages, double confidence,
                          std::span<const double> thresholds) noexcept {
    return stage + 1 >= n_stages || confidence >= thresholds[stage];
}

/// First stage whose gate accepts, given every stage's confidence.
std::size_t route_stage(std::span<const double> confidences, std::span<const double> thresholds) noexcept;

struct Routing {
    std::size_t stage = 0;
    Label predicted_label = 0;
};

/// Column index in `aligned` of each chain model. Throws ConfigError when a
/// chain model is missing or its profile disagrees.
std::vector<std::size_t> resolve_chain(const AlignedRecordSet& aligned, const CascadeConfig& config);

Routing route(const AlignedRecordSet& aligned, std::span<const std::size_t> columns, std::size_t row,
              std::span<const double> thresholds);
Routing route(const AlignedRecordSet& aligned, std::size_t row, const CascadeConfig& config);

CascadePoint evaluate(const AlignedRecordSet& aligned, const CascadeConfig& config);

/// Average per-sample GMACs given how many rows each stage answered: the
/// first stage is charged for every row, stage s for every row that no
/// earlier stage answered. Shared by evaluation and the runtime executor.
double expected_macs_from_counts(std::span<const ModelProfile> chain, std::span<const std::int64_t> stage_counts);

/// `count` evenly spaced thresholds k / count for k = 0 .. count-1.
/// The default of 50 gives the 0.02 lattice 0.00, 0.02, ..., 0.98.
std::vector<double> default_grid(std::size_t count = 50);

/// Two-model curve, one point per grid value. Grid must be sorted ascending
/// and lie in [0, 1]. Grid points are evaluated in parallel; output is
/// independent of the thread count.
TradeoffCurve sweep(const AlignedRecordSet& aligned, std::span<const ModelProfile> chain,
                    std::span<const double> grid, unsigned threads = 0);

/// Three-model cascade over the Cartesian product grid1 x grid2, grid1-major.
std::vector<CascadePoint> sweep_kpass(const AlignedRecordSet& aligned, std::span<const ModelProfile> chain,
                                      std::span<const double> grid1, std::span<const double> grid2,
                                      unsigned threads = 0);

/// Relative MACs multiplier c * h^2 * w^2 * l.
double estimate_scaling_cost(const ScalingSpec& spec);

}  // namespace cascade
