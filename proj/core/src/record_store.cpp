#include "cascade/record_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

template <typename T>
bool parse_number(std::string_view text, T& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

std::int64_t RecordSet::correct_count() const noexcept {
    return std::count_if(records.begin(), records.end(),
                         [](const PredictionRecord& r) { return r.correct(); });
}

double RecordSet::accuracy() const noexcept {
    if (records.empty()) return 0.0;
    return static_cast<double>(correct_count()) / static_cast<double>(records.size());
}

bool valid_sample_id(std::string_view id) noexcept {
    if (id.empty()) return false;
    return std::none_of(id.begin(), id.end(), [](char c) {
        return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
}

std::string format_confidence(double confidence) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", confidence);
    return buf;
}

std::vector<PredictionRecord> parse_records(std::istream& in, const std::string& source_name) {
    std::vector<PredictionRecord> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw FormatError(source_name, 1, "empty file, expected header");
    ++line_no;
    if (line != kRecordHeader) {
        throw FormatError(source_name, line_no,
                          "bad header '" + line + "', expected '" + kRecordHeader + "'");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            throw FormatError(source_name, line_no, "CR line ending (LF only)");
        if (line.empty()) {
            // A single trailing newline is fine; blank lines in the middle are not.
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw FormatError(source_name, line_no, "blank line");
        }

        const auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw FormatError(source_name, line_no,
                              "expected 4 fields, got " + std::to_string(fields.size()));
        }

        PredictionRecord rec;
        rec.sample_id = std::string(fields[0]);
        if (!valid_sample_id(rec.sample_id))
            throw FormatError(source_name, line_no, "invalid sample_id '" + rec.sample_id + "'");
        if (!parse_number(fields[1], rec.predicted_label) || rec.predicted_label < 0)
            throw FormatError(source_name, line_no, "bad predicted_label '" + std::string(fields[1]) + "'");
        if (!parse_number(fields[2], rec.confidence) || !std::isfinite(rec.confidence))
            throw FormatError(source_name, line_no, "bad confidence '" + std::string(fields[2]) + "'");
        if (rec.confidence < 0.0 || rec.confidence > 1.0)
            throw FormatError(source_name, line_no,
                              "confidence " + std::string(fields[2]) + " outside [0,1]");
        if (!parse_number(fields[3], rec.true_label) || rec.true_label < 0)
            throw FormatError(source_name, line_no, "bad true_label '" + std::string(fields[3]) + "'");

        if (!seen.insert(rec.sample_id).second)
            throw FormatError(source_name, line_no, "duplicate sample_id '" + rec.sample_id + "'");
        records.push_back(std::move(rec));
    }
    return records;
}

RecordSet load_record_set(const std::filesystem::path& path, const ModelProfile& profile,
                          const std::string& dataset_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string(), 0, "cannot open record file");
    RecordSet set;
    set.model = profile;
    set.dataset_name = dataset_name;
    set.records = parse_records(in, path.string());
    return set;
}

void write_records(std::ostream& out, std::span<const PredictionRecord> records) {
    out << kRecordHeader << '\n';
    for (const auto& r : records) {
        out << r.sample_id << ',' << r.predicted_label << ',' << format_confidence(r.confidence)
            << ',' << r.true_label << '\n';
    }
}

void write_record_set(const std::filesystem::path& path, const RecordSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_records(out, set.records);
}

ModelProfile parse_profile(const std::string& json_text, const std::string& source_name) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(source_name, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError(source_name, 0, "profile must be a JSON object");

    ModelProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.macs_per_sample = j.at("macs_per_sample").get<double>();
        p.params_m = j.value("params_m", 0.0);
        p.input_resolution = j.value("input_resolution", 0);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(source_name, 0, std::string("bad profile field: ") + e.what());
    }
    if (p.name.empty()) throw FormatError(source_name, 0, "profile name is empty");
    if (!(p.macs_per_sample > 0.0) || !std::isfinite(p.macs_per_sample))
        throw FormatError(source_name, 0, "macs_per_sample must be > 0");
    if (p.params_m < 0.0) throw FormatError(source_name, 0, "params_m must be >= 0");
    return p;
}

ModelProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string(), 0, "cannot open profile");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_profile(buf.str(), path.string());
}

std::string profile_to_json(const ModelProfile& profile) {
    nlohmann::ordered_json j;
    j["name"] = profile.name;
    j["macs_per_sample"] = profile.macs_per_sample;
    j["params_m"] = profile.params_m;
    j["input_resolution"] = profile.input_resolution;
    return j.dump(2) + "\n";
}

std::size_t AlignedRecordSet::find_model(const std::string& name) const noexcept {
    for (std::size_t i = 0; i < models_.size(); ++i)
        if (models_[i].name == name) return i;
    return npos;
}

std::int64_t AlignedRecordSet::correct_count(std::size_t model) const {
    const auto& pred = predicted_.at(model);
    std::int64_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) n += pred[i] == true_labels_[i];
    return n;
}

double AlignedRecordSet::accuracy(std::size_t model) const {
    if (row_count() == 0) return 0.0;
    return static_cast<double>(correct_count(model)) / static_cast<double>(row_count());
}

AlignedRecordSet AlignedRecordSet::select_models(std::span<const std::size_t> model_indices) const {
    AlignedRecordSet out;
    out.dataset_name_ = dataset_name_;
    out.sample_ids_ = sample_ids_;
    out.true_labels_ = true_labels_;
    for (auto idx : model_indices) {
        if (idx >= models_.size()) throw ConfigError("model index out of range");
        out.models_.push_back(models_[idx]);
        out.predicted_.push_back(predicted_[idx]);
        out.confidence_.push_back(confidence_[idx]);
    }
    return out;
}

AlignedRecordSet align(std::span<const RecordSet> sets) {
    if (sets.size() < 2) throw AlignmentError("align needs at least 2 record sets");
    for (const auto& s : sets) {
        if (s.dataset_name != sets.front().dataset_name) {
            throw AlignmentError("dataset mismatch: '" + sets.front().dataset_name + "' vs '" +
                                 s.dataset_name + "'");
        }
    }

    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (sets[i].model.name == sets[j].model.name)
                throw AlignmentError("model '" + sets[i].model.name + "' appears twice");

    const auto& first = sets.front();
    std::vector<std::size_t> order(first.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return first.records[a].sample_id < first.records[b].sample_id;
    });

    AlignedRecordSet out;
    out.dataset_name_ = first.dataset_name;
    const std::size_t n = first.records.size();
    out.sample_ids_.reserve(n);
    out.true_labels_.reserve(n);
    for (auto i : order) {
        out.sample_ids_.push_back(first.records[i].sample_id);
        out.true_labels_.push_back(first.records[i].true_label);
    }

    std::unordered_map<std::string_view, std::size_t> row_of;
    row_of.reserve(n);
    for (std::size_t r = 0; r < n; ++r) row_of.emplace(out.sample_ids_[r], r);

    for (const auto& s : sets) {
        if (s.records.size() != n) {
            // Find a concrete missing id for the message, whichever side it is on.
            std::unordered_set<std::string_view> ids;
            for (const auto& rec : s.records) ids.insert(rec.sample_id);
            for (const auto& id : out.sample_ids_) {
                if (!ids.count(id)) {
                    throw AlignmentError("sample_id '" + id + "' missing from records of model '" +
                                         s.model.name + "'");
                }
            }
            for (const auto& rec : s.records) {
                if (!row_of.count(rec.sample_id)) {
                    throw AlignmentError("sample_id '" + rec.sample_id + "' missing from records of model '" +
                                         first.model.name + "'");
                }
            }
            throw AlignmentError("record count mismatch for model '" + s.model.name + "'");
        }

        std::vector<Label> pred(n);
        std::vector<double> conf(n);
        std::vector<char> filled(n, 0);
        for (const auto& rec : s.records) {
            auto it = row_of.find(rec.sample_id);
            if (it == row_of.end()) {
                throw AlignmentError("sample_id '" + rec.sample_id + "' missing from records of model '" +
                                     first.model.name + "'");
            }
            const auto r = it->second;
            if (out.true_labels_[r] != rec.true_label) {
                throw AlignmentError("conflicting true_label for sample_id '" + rec.sample_id + "': " +
                                     std::to_string(out.true_labels_[r]) + " (" + first.model.name +
                                     ") vs " + std::to_string(rec.true_label) + " (" + s.model.name + ")");
            }
            if (filled[r]) throw AlignmentError("duplicate sample_id '" + rec.sample_id + "'");
            filled[r] = 1;
            pred[r] = rec.predicted_label;
            conf[r] = rec.confidence;
        }
        out.models_.push_back(s.model);
        out.predicted_.push_back(std::move(pred));
        out.confidence_.push_back(std::move(conf));
    }
    return out;
}

}  // namespace cascade
