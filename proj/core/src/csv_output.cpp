#include "cascade/csv_output.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

#include "cascade/errors.hpp"

namespace cascade {

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    // Avoid "-0.000000" so byte-identical comparisons don't trip on signed zero.
    std::string s(buf);
    if (s == "-0.000000") s.erase(0, 1);
    return s;
}

std::string curve_header(std::size_t stages) {
    std::string h = stages == 3 ? "threshold,threshold2" : "threshold";
    h += ",accuracy,expected_gmacs";
    for (std::size_t s = 0; s < stages; ++s) h += ",frac_stage" + std::to_string(s);
    return h;
}

void write_curve_csv(std::ostream& out, std::span<const CascadePoint> points, std::size_t stages) {
    if (stages != 2 && stages != 3) throw ConfigError("curve CSV supports 2 or 3 stages");
    out << curve_header(stages) << '\n';
    for (const auto& p : points) {
        if (p.thresholds.size() + 1 != stages || p.stage_fractions.size() != stages)
            throw ConfigError("curve point does not match stage count");
        for (double t : p.thresholds) out << fixed6(t) << ',';
        out << fixed6(p.accuracy) << ',' << fixed6(p.expected_macs);
        for (double f : p.stage_fractions) out << ',' << fixed6(f);
        out << '\n';
    }
}

void write_calibration_csv(std::ostream& out,
                           const std::vector<std::pair<std::string, std::vector<ConfidenceBinStats>>>& models) {
    out << "model,bin_lower,bin_upper,n_samples,n_correct,accuracy\n";
    for (const auto& [name, bins] : models) {
        for (const auto& b : bins) {
            out << name << ',' << fixed6(b.bin_lower) << ',' << fixed6(b.bin_upper) << ',' << b.n_samples << ','
                << b.n_correct << ',' << fixed6(b.accuracy) << '\n';
        }
    }
}

void write_decomposition_csv(std::ostream& out, const MistakeDecomposition& d) {
    out << "bin_lower,bin_upper,n_mistakes,correctable,non_correctable\n";
    for (const auto& b : d.bins) {
        out << fixed6(b.bin_lower) << ',' << fixed6(b.bin_upper) << ',' << b.mistakes() << ',' << b.correctable << ','
            << b.non_correctable << '\n';
    }
}

namespace {

std::string thresholds_field(const std::vector<double>& t) {
    std::string s;
    for (double v : t) {
        if (!s.empty()) s += ';';
        s += fixed6(v);
    }
    return s;
}

}  // namespace

void write_optimize_table(std::ostream& out, std::span<const OptimizeRow> rows) {
    out << "rank,chain,thresholds,accuracy_pct,delta_acc_pt,expected_gmacs,big_gmacs,reduction_pct,feasible,replacement\n";
    std::size_t rank = 0;
    for (const auto& r : rows) {
        const auto& sel = r.selection;
        out << ++rank << ',' << sel.config.chain_label() << ',' << thresholds_field(sel.config.thresholds) << ','
            << fixed6(100.0 * sel.point.accuracy) << ',' << fixed6(100.0 * (sel.point.accuracy - r.big_accuracy)) << ','
            << fixed6(sel.point.expected_macs) << ',' << fixed6(sel.config.chain.back().macs_per_sample) << ','
            << fixed6(100.0 * sel.macs_reduction) << ',' << (sel.feasible ? "yes" : "no") << ','
            << (sel.replacement ? "yes" : "no") << '\n';
    }
}

void write_generalization_csv(std::ostream& out, std::span<const GeneralizationReport> reports) {
    out << "chain,thresholds,dataset,accuracy_pct,big_accuracy_pct,delta_acc_pt,expected_gmacs,reduction_pct,frac_forwarded\n";
    for (const auto& rep : reports) {
        for (const auto& d : rep.datasets) {
            out << rep.config.chain_label() << ',' << thresholds_field(rep.config.thresholds) << ',' << d.dataset_name
                << ',' << fixed6(100.0 * d.point.accuracy) << ',' << fixed6(100.0 * d.big_accuracy) << ','
                << fixed6(100.0 * d.accuracy_delta) << ',' << fixed6(d.point.expected_macs) << ','
                << fixed6(100.0 * d.macs_reduction) << ',' << fixed6(d.point.forwarded_fraction()) << '\n';
        }
    }
}

void write_robustness_csv(std::ostream& out, const std::string& chain, const RobustnessReport& report) {
    out << "chain,tuned_on,thresholds,reference,delta_acc_pt,reduction_pct\n";
    for (const auto& e : report.entries) {
        out << chain << ',' << e.tuned_on << ',' << thresholds_field(e.selection.config.thresholds) << ','
            << e.on_reference.dataset_name << ',' << fixed6(100.0 * e.on_reference.accuracy_delta) << ','
            << fixed6(100.0 * e.on_reference.macs_reduction) << '\n';
    }
    out << chain << ",mean,,," << fixed6(100.0 * report.accuracy_delta.mean) << ','
        << fixed6(100.0 * report.macs_reduction.mean) << '\n';
    out << chain << ",sd,,," << fixed6(100.0 * report.accuracy_delta.stddev) << ','
        << fixed6(100.0 * report.macs_reduction.stddev) << '\n';
}

void write_execution_csv(std::ostream& out, const ExecutionReport& report) {
    out << "sample_id,stage,predicted_label,confidence\n";
    for (const auto& o : report.outcomes)
        out << o.sample_id << ',' << o.stage << ',' << o.predicted_label << ',' << fixed6(o.confidence) << '\n';
}

void write_execution_summary(std::ostream& out, const ExecutionReport& report, const CascadeConfig& config) {
    out << "stage,model,answered,invoked,gmacs\n";
    for (std::size_t s = 0; s < report.stage_counts.size(); ++s) {
        out << s << ',' << config.chain[s].name << ',' << report.stage_counts[s] << ',' << report.stage_invocations[s]
            << ',' << fixed6(static_cast<double>(report.stage_invocations[s]) * config.chain[s].macs_per_sample) << '\n';
    }
    out << "total,," << report.outcomes.size() << ",," << fixed6(report.total_gmacs) << '\n';
    out << "per_sample,,,," << fixed6(report.expected_gmacs) << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) return out;
        start = comma + 1;
    }
}

}  // namespace

CurveTable read_curve_csv(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(source_name, 1, "empty curve file");
    CurveTable t;
    t.header = split_csv_line(line);

    const bool three = t.header.size() > 1 && t.header[1] == "threshold2";
    const auto expected = split_csv_line(curve_header(three ? 3 : 2));
    for (std::size_t i = 0; i < std::max(expected.size(), t.header.size()); ++i) {
        if (i >= t.header.size())
            throw FormatError(source_name, 1, "schema mismatch: missing column '" + expected[i] + "'");
        if (i >= expected.size())
            throw FormatError(source_name, 1, "schema mismatch: unexpected column '" + t.header[i] + "'");
        if (t.header[i] != expected[i])
            throw FormatError(source_name, 1,
                              "schema mismatch: column " + std::to_string(i + 1) + " is '" + t.header[i] +
                                  "', expected '" + expected[i] + "'");
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != t.header.size())
            throw FormatError(source_name, line_no, "expected " + std::to_string(t.header.size()) + " fields");
        t.rows.push_back(std::move(fields));
    }
    return t;
}

void write_merged_curves(std::ostream& out, std::span<const std::pair<std::string, CurveTable>> curves) {
    if (curves.empty()) throw ConfigError("no curves to merge");
    const auto& header = curves.front().second.header;
    for (const auto& [name, table] : curves) {
        if (table.header != header)
            throw FormatError(name, 1, "schema mismatch: curve columns differ from '" + curves.front().first + "'");
    }
    out << "pair";
    for (const auto& h : header) out << ',' << h;
    out << '\n';
    for (const auto& [name, table] : curves) {
        for (const auto& row : table.rows) {
            out << name;
            for (const auto& f : row) out << ',' << f;
            out << '\n';
        }
    }
}

}  // namespace cascade
