#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cascade/record_store.hpp"

namespace cascade {

enum class DatasetRole { tuning, target, unspecified };

struct ManifestEntry {
    std::filesystem::path profile;
    std::filesystem::path records;
};

struct DatasetEntry {
    std::string name;
    DatasetRole role = DatasetRole::unspecified;
    std::vector<ManifestEntry> entries;
};

/// Binds model profiles to record files, per dataset. Paths are resolved
/// relative to the manifest's directory at load time.
///
/// {
///   "datasets": [
///     { "name": "imagenet-1k", "role": "tuning",
///       "models": [ { "profile": "b4.json", "records": "b4.csv" }, ... ] }
///   ]
/// }
struct Manifest {
    std::filesystem::path source;
    std::vector<DatasetEntry> datasets;

    /// Dataset marked "tuning", else the first one.
    const DatasetEntry& tuning() const;
    /// Every dataset other than the tuning one, in manifest order.
    std::vector<const DatasetEntry*> targets() const;
    /// Throws ConfigError when absent.
    const DatasetEntry& dataset(const std::string& name) const;
};

Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir,
                        const std::string& source_name);

std::vector<ModelProfile> load_profiles(const DatasetEntry& dataset);
std::vector<RecordSet> load_record_sets(const DatasetEntry& dataset);
/// Loads and aligns every model of the dataset, in manifest order.
AlignedRecordSet load_aligned(const DatasetEntry& dataset);

}  // namespace cascade
