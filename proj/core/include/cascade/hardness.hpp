#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cascade/record_store.hpp"

namespace cascade {

inline constexpr std::size_t kDefaultBins = 10;

struct ConfidenceBinStats {
    double bin_lower = 0.0;
    double bin_upper = 0.0;
    std::int64_t n_samples = 0;
    std::int64_t n_correct = 0;
    double accuracy = 0.0;  // 0 for an empty bin
};

/// Uniform bins over [0, 1]; bin i is [i/n, (i+1)/n), the last one closed.
/// Bin assignment is consistent with the reported bounds.
class ConfidenceBinning {
public:
    explicit ConfidenceBinning(std::size_t n_bins);

    std::size_t size() const noexcept { return n_bins_; }
    double lower(std::size_t bin) const noexcept;
    double upper(std::size_t bin) const noexcept;
    std::size_t bin_of(double confidence) const noexcept;

private:
    std::size_t n_bins_;
};

std::vector<ConfidenceBinStats> bin_by_confidence(const RecordSet& records, std::size_t n_bins = kDefaultBins);
std::vector<ConfidenceBinStats> bin_by_confidence(std::span<const double> confidence,
                                                  std::span<const Label> predicted,
                                                  std::span<const Label> truth,
                                                  std::size_t n_bins = kDefaultBins);

struct MistakeBin {
    double bin_lower = 0.0;
    double bin_upper = 0.0;
    std::int64_t correctable = 0;      // little wrong, big right
    std::int64_t non_correctable = 0;  // both wrong

    std::int64_t mistakes() const noexcept { return correctable + non_correctable; }
};

/// Little-model mistakes split by whether the big model fixes them, binned by
/// little confidence.
struct MistakeDecomposition {
    std::vector<MistakeBin> bins;
    std::int64_t total_correctable = 0;
    std::int64_t total_non_correctable = 0;
    /// True when the little model made no mistakes; bins are then all zero and
    /// the summary statistics are absent.
    bool no_mistakes = false;
    /// Little confidences of the correctable mistakes, sorted ascending.
    std::vector<double> correctable_confidences;

    std::int64_t total_mistakes() const noexcept { return total_correctable + total_non_correctable; }
    std::optional<double> mean_correctable_confidence() const;
    /// Smallest observed confidence c with fraction(conf <= c) >= q. q in [0, 1].
    std::optional<double> correctable_quantile(double q) const;
};

/// `aligned` must hold exactly two models: little first, big second.
MistakeDecomposition decompose_mistakes(const AlignedRecordSet& aligned, std::size_t n_bins = kDefaultBins);

/// Lower quantile of an ascending-sorted sample: the smallest element x with
/// (#elements <= x) / n >= q.
double lower_quantile(std::span<const double> sorted, double q);

}  // namespace cascade
