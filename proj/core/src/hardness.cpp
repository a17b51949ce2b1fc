#include "cascade/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cascade/errors.hpp"

namespace cascade {

ConfidenceBinning::ConfidenceBinning(std::size_t n_bins) : n_bins_(n_bins) {
    if (n_bins == 0) throw ConfigError("n_bins must be >= 1");
}

double ConfidenceBinning::lower(std::size_t bin) const noexcept {
    return static_cast<double>(bin) / static_cast<double>(n_bins_);
}

double ConfidenceBinning::upper(std::size_t bin) const noexcept {
    return bin + 1 == n_bins_ ? 1.0 : static_cast<double>(bin + 1) / static_cast<double>(n_bins_);
}

std::size_t ConfidenceBinning::bin_of(double confidence) const noexcept {
    const double scaled = confidence * static_cast<double>(n_bins_);
    std::size_t idx = scaled <= 0.0 ? 0 : static_cast<std::size_t>(scaled);
    idx = std::min(idx, n_bins_ - 1);
    // The product can round across a boundary; settle against the bounds.
    while (idx > 0 && confidence < lower(idx)) --idx;
    while (idx + 1 < n_bins_ && confidence >= lower(idx + 1)) ++idx;
    return idx;
}

std::vector<ConfidenceBinStats> bin_by_confidence(std::span<const double> confidence,
                                                  std::span<const Label> predicted,
                                                  std::span<const Label> truth, std::size_t n_bins) {
    if (confidence.empty()) throw Error("bin_by_confidence: empty record set");
    const ConfidenceBinning binning(n_bins);

    std::vector<ConfidenceBinStats> bins(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        bins[b].bin_lower = binning.lower(b);
        bins[b].bin_upper = binning.upper(b);
    }
    for (std::size_t i = 0; i < confidence.size(); ++i) {
        auto& bin = bins[binning.bin_of(confidence[i])];
        ++bin.n_samples;
        bin.n_correct += predicted[i] == truth[i];
    }
    for (auto& bin : bins) {
        if (bin.n_samples > 0)
            bin.accuracy = static_cast<double>(bin.n_correct) / static_cast<double>(bin.n_samples);
    }
    return bins;
}

std::vector<ConfidenceBinStats> bin_by_confidence(const RecordSet& records, std::size_t n_bins) {
    std::vector<double> conf;
    std::vector<Label> pred, truth;
    conf.reserve(records.size());
    pred.reserve(records.size());
    truth.reserve(records.size());
    for (const auto& r : records.records) {
        conf.push_back(r.confidence);
        pred.push_back(r.predicted_label);
        truth.push_back(r.true_label);
    }
    return bin_by_confidence(conf, pred, truth, n_bins);
}

double lower_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile q must be in [0,1]");
    const auto n = static_cast<double>(sorted.size());
    // Smallest count k >= 1 with k / n >= q, checked exactly against the division.
    auto k = static_cast<std::size_t>(std::ceil(q * n));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    while (k > 1 && static_cast<double>(k - 1) / n >= q) --k;
    while (k < sorted.size() && static_cast<double>(k) / n < q) ++k;
    return sorted[k - 1];
}

std::optional<double> MistakeDecomposition::mean_correctable_confidence() const {
    if (correctable_confidences.empty()) return std::nullopt;
    // Sorted ascending input; plain summation is deterministic here.
    const double sum = std::accumulate(correctable_confidences.begin(), correctable_confidences.end(), 0.0);
    return sum / static_cast<double>(correctable_confidences.size());
}

std::optional<double> MistakeDecomposition::correctable_quantile(double q) const {
    if (correctable_confidences.empty()) return std::nullopt;
    return lower_quantile(correctable_confidences, q);
}

MistakeDecomposition decompose_mistakes(const AlignedRecordSet& aligned, std::size_t n_bins) {
    if (aligned.model_count() != 2)
        throw ConfigError("decompose_mistakes needs exactly 2 models (little, big), got " +
                          std::to_string(aligned.model_count()));
    const ConfidenceBinning binning(n_bins);

    MistakeDecomposition out;
    out.bins.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        out.bins[b].bin_lower = binning.lower(b);
        out.bins[b].bin_upper = binning.upper(b);
    }

    const auto truth = aligned.true_labels();
    const auto little_pred = aligned.predicted(0);
    const auto little_conf = aligned.confidence(0);
    const auto big_pred = aligned.predicted(1);

    for (std::size_t i = 0; i < aligned.row_count(); ++i) {
        if (little_pred[i] == truth[i]) continue;
        auto& bin = out.bins[binning.bin_of(little_conf[i])];
        if (big_pred[i] == truth[i]) {
            ++bin.correctable;
            ++out.total_correctable;
            out.correctable_confidences.push_back(little_conf[i]);
        } else {
            ++bin.non_correctable;
            ++out.total_non_correctable;
        }
    }
    std::sort(out.correctable_confidences.begin(), out.correctable_confidences.end());
    out.no_mistakes = out.total_mistakes() == 0;
    return out;
}

}  // namespace cascade
