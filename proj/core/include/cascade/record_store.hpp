#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

using Label = std::int32_t;

/// One model's output on one sample. Only the argmax label and the max
/// softmax probability are kept.
struct PredictionRecord {
    std::string sample_id;
    Label predicted_label = 0;
    double confidence = 0.0;
    Label true_label = 0;

    bool correct() const noexcept { return predicted_label == true_label; }
};

/// Identity and static cost of a model. `macs_per_sample` is in GMACs.
struct ModelProfile {
    std::string name;
    double macs_per_sample = 0.0;
    double params_m = 0.0;
    std::int32_t input_resolution = 0;
};

struct RecordSet {
    ModelProfile model;
    std::string dataset_name;
    std::vector<PredictionRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    std::int64_t correct_count() const noexcept;
    double accuracy() const noexcept;
};

/// Records from several models joined on sample id. Stored column-wise: one
/// label/confidence column per model, rows sorted by sample id. Immutable
/// once built by `align`.
class AlignedRecordSet {
public:
    AlignedRecordSet() = default;

    const std::string& dataset_name() const noexcept { return dataset_name_; }
    const std::vector<ModelProfile>& models() const noexcept { return models_; }
    std::size_t model_count() const noexcept { return models_.size(); }
    std::size_t row_count() const noexcept { return sample_ids_.size(); }

    const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
    std::span<const Label> true_labels() const noexcept { return true_labels_; }
    std::span<const Label> predicted(std::size_t model) const { return predicted_.at(model); }
    std::span<const double> confidence(std::size_t model) const { return confidence_.at(model); }

    /// Index of the model called `name`, or npos.
    std::size_t find_model(const std::string& name) const noexcept;

    std::int64_t correct_count(std::size_t model) const;
    double accuracy(std::size_t model) const;

    /// Restricts to a subset of models (in the given order); rows unchanged.
    AlignedRecordSet select_models(std::span<const std::size_t> model_indices) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    friend AlignedRecordSet align(std::span<const RecordSet> sets);

    std::string dataset_name_;
    std::vector<ModelProfile> models_;
    std::vector<std::string> sample_ids_;
    std::vector<Label> true_labels_;
    std::vector<std::vector<Label>> predicted_;
    std::vector<std::vector<double>> confidence_;
};

inline constexpr const char* kRecordHeader = "sample_id,predicted_label,confidence,true_label";

/// Parses a record file. Throws FormatError naming the offending line for
/// malformed rows, duplicate ids, or confidence outside [0, 1].
RecordSet load_record_set(const std::filesystem::path& path, const ModelProfile& profile,
                          const std::string& dataset_name = {});
std::vector<PredictionRecord> parse_records(std::istream& in, const std::string& source_name);

void write_records(std::ostream& out, std::span<const PredictionRecord> records);
void write_record_set(const std::filesystem::path& path, const RecordSet& set);

/// Fixed-point with six decimals, the canonical on-disk form of a confidence.
std::string format_confidence(double confidence);

/// Validates a sample id: non-empty, no separators that would break the CSV
/// or runner line formats.
bool valid_sample_id(std::string_view id) noexcept;

ModelProfile load_profile(const std::filesystem::path& path);
ModelProfile parse_profile(const std::string& json_text, const std::string& source_name);
std::string profile_to_json(const ModelProfile& profile);

/// Joins record sets on sample id. Every id must be present in every set and
/// all sets must agree on its true label. Model order follows input order.
AlignedRecordSet align(std::span<const RecordSet> sets);

}  // namespace cascade
