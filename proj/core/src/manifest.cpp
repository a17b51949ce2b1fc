#include "cascade/manifest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cascade/errors.hpp"

namespace cascade {

namespace fs = std::filesystem;

const DatasetEntry& Manifest::tuning() const {
    if (datasets.empty()) throw ConfigError("manifest has no datasets");
    for (const auto& d : datasets)
        if (d.role == DatasetRole::tuning) return d;
    return datasets.front();
}

std::vector<const DatasetEntry*> Manifest::targets() const {
    const auto* tune = &tuning();
    std::vector<const DatasetEntry*> out;
    for (const auto& d : datasets)
        if (&d != tune) out.push_back(&d);
    return out;
}

const DatasetEntry& Manifest::dataset(const std::string& name) const {
    for (const auto& d : datasets)
        if (d.name == name) return d;
    throw ConfigError("dataset '" + name + "' not in manifest " + source.string());
}

Manifest parse_manifest(const std::string& json_text, const fs::path& base_dir,
                        const std::string& source_name) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(source_name + ": invalid JSON: " + e.what());
    }

    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    Manifest m;
    m.source = source_name;
    try {
        for (const auto& jd : j.at("datasets")) {
            DatasetEntry d;
            d.name = jd.at("name").get<std::string>();
            const auto role = jd.value("role", std::string());
            if (role == "tuning") d.role = DatasetRole::tuning;
            else if (role == "target") d.role = DatasetRole::target;
            else if (role.empty()) d.role = DatasetRole::unspecified;
            else throw ConfigError(source_name + ": unknown dataset role '" + role + "'");

            for (const auto& jm : jd.at("models")) {
                ManifestEntry e{resolve(jm.at("profile").get<std::string>()),
                                resolve(jm.at("records").get<std::string>())};
                for (const auto* p : {&e.profile, &e.records})
                    if (!fs::exists(*p)) throw ConfigError(source_name + ": file not found: " + p->string());
                d.entries.push_back(std::move(e));
            }
            if (d.entries.empty()) throw ConfigError(source_name + ": dataset '" + d.name + "' lists no models");
            m.datasets.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(source_name + ": bad manifest: " + e.what());
    }
    if (m.datasets.empty()) throw ConfigError(source_name + ": manifest has no datasets");

    int n_tuning = 0;
    for (const auto& d : m.datasets) n_tuning += d.role == DatasetRole::tuning;
    if (n_tuning > 1) throw ConfigError(source_name + ": more than one tuning dataset");
    return m;
}

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), path.parent_path(), path.string());
}

std::vector<ModelProfile> load_profiles(const DatasetEntry& dataset) {
    std::vector<ModelProfile> out;
    for (const auto& e : dataset.entries) out.push_back(load_profile(e.profile));
    return out;
}

std::vector<RecordSet> load_record_sets(const DatasetEntry& dataset) {
    std::vector<RecordSet> out;
    for (const auto& e : dataset.entries)
        out.push_back(load_record_set(e.records, load_profile(e.profile), dataset.name));
    return out;
}

AlignedRecordSet load_aligned(const DatasetEntry& dataset) {
    const auto sets = load_record_sets(dataset);
    if (sets.size() == 1) throw ConfigError("dataset '" + dataset.name + "' has a single model");
    return align(sets);
}

}  // namespace cascade
