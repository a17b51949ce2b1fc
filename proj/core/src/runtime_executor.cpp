#include "cascade/runtime_executor.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

#include "cascade/errors.hpp"
#include "subprocess_runner.hpp"

namespace cascade {

namespace {

class ReplayRunner final : public ModelRunner {
public:
    ReplayRunner(const ReplayRunnerSpec& spec, std::size_t stage) : name_(spec.model_name), stage_(stage) {
        // The profile only matters for cost accounting, which happens elsewhere.
        const auto set = load_record_set(spec.records, ModelProfile{spec.model_name, 1.0, 0.0, 0});
        by_id_.reserve(set.records.size());
        for (const auto& r : set.records) by_id_.emplace(r.sample_id, StagePrediction{r.predicted_label, r.confidence});
    }

    std::string hello() override { return name_; }

    std::vector<StagePrediction> predict(std::span<const Sample> samples) override {
        std::vector<StagePrediction> out;
        out.reserve(samples.size());
        for (const auto& s : samples) {
            auto it = by_id_.find(s.id);
            if (it == by_id_.end())
                throw RunnerError(RunnerError::Kind::protocol, stage_, "replay runner has no record for sample '" + s.id + "'");
            out.push_back(it->second);
        }
        return out;
    }

    void close() override {}

private:
    std::string name_;
    std::size_t stage_;
    std::unordered_map<std::string, StagePrediction> by_id_;
};

bool is_fixed6(std::string_view text) {
    const auto dot = text.find('.');
    if (dot == std::string_view::npos || dot == 0 || text.size() - dot - 1 != 6) return false;
    for (std::size_t i = 0; i < text.size(); ++i)
        if (i != dot && !std::isdigit(static_cast<unsigned char>(text[i]))) return false;
    return true;
}

}  // namespace

std::unique_ptr<ModelRunner> make_runner(const RunnerSpec& spec, std::size_t stage) {
    if (const auto* replay = std::get_if<ReplayRunnerSpec>(&spec)) return std::make_unique<ReplayRunner>(*replay, stage);
    return detail::start_subprocess_runner(std::get<SubprocessRunnerSpec>(spec), stage);
}

std::string handshake(ModelRunner& runner, const std::string& expected_name, std::size_t stage) {
    auto name = runner.hello();
    if (name != expected_name) {
        throw RunnerError(RunnerError::Kind::name_mismatch, stage,
                          "runner announced model '" + name + "', expected '" + expected_name + "'");
    }
    return name;
}

std::string handshake(const RunnerSpec& spec, std::size_t stage) {
    auto runner = make_runner(spec, stage);
    auto name = runner->hello();
    runner->close();
    return name;
}

std::optional<MemoryPolicy> parse_memory_policy(std::string_view text) {
    if (text == "resident") return MemoryPolicy::resident;
    if (text == "swap") return MemoryPolicy::swap;
    return std::nullopt;
}

const char* to_string(MemoryPolicy policy) {
    return policy == MemoryPolicy::resident ? "resident" : "swap";
}

std::optional<ResultLine> parse_result_line(std::string_view line) {
    std::vector<std::string_view> tok;
    std::size_t start = 0;
    for (;;) {
        const auto sp = line.find(' ', start);
        tok.push_back(line.substr(start, sp == std::string_view::npos ? std::string_view::npos : sp - start));
        if (sp == std::string_view::npos) break;
        start = sp + 1;
    }
    if (tok.size() != 4 || tok[0] != "RESULT" || !valid_sample_id(tok[1])) return std::nullopt;

    ResultLine r;
    r.sample_id = std::string(tok[1]);
    auto [p1, e1] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), r.prediction.predicted_label);
    if (e1 != std::errc() || p1 != tok[2].data() + tok[2].size() || r.prediction.predicted_label < 0) return std::nullopt;
    if (!is_fixed6(tok[3])) return std::nullopt;
    auto [p2, e2] = std::from_chars(tok[3].data(), tok[3].data() + tok[3].size(), r.prediction.confidence);
    if (e2 != std::errc() || p2 != tok[3].data() + tok[3].size()) return std::nullopt;
    if (r.prediction.confidence < 0.0 || r.prediction.confidence > 1.0) return std::nullopt;
    return r;
}

std::string format_result_line(const std::string& sample_id, const StagePrediction& prediction) {
    return "RESULT " + sample_id + " " + std::to_string(prediction.predicted_label) + " " +
           format_confidence(prediction.confidence) + "\n";
}

ExecutionReport execute(std::span<const Sample> samples, const CascadeConfig& config,
                        const RunnerFactory& start_runner, MemoryPolicy policy) {
    config.validate();
    const auto k = config.stages();
    {
        std::unordered_set<std::string_view> ids;
        for (const auto& s : samples) {
            if (!valid_sample_id(s.id)) throw ConfigError("invalid sample id '" + s.id + "'");
            if (!ids.insert(s.id).second) throw ConfigError("duplicate sample id '" + s.id + "'");
        }
    }

    const auto started = std::chrono::steady_clock::now();
    ExecutionReport report;
    report.outcomes.resize(samples.size());
    report.stage_counts.assign(k, 0);
    report.stage_invocations.assign(k, 0);

    auto settle = [&](std::size_t i, std::size_t stage, const StagePrediction& p) {
        report.outcomes[i] = {samples[i].id, stage, p.predicted_label, p.confidence};
        ++report.stage_counts[stage];
    };

    if (policy == MemoryPolicy::resident) {
        std::vector<std::unique_ptr<ModelRunner>> runners;
        for (std::size_t s = 0; s < k; ++s) {
            runners.push_back(start_runner(s));
            handshake(*runners.back(), config.chain[s].name, s);
        }
        for (std::size_t i = 0; i < samples.size(); ++i) {
            for (std::size_t s = 0; s < k; ++s) {
                const auto p = runners[s]->predict(samples.subspan(i, 1)).at(0);
                ++report.stage_invocations[s];
                if (stage_answers(s, k, p.confidence, config.thresholds)) {
                    settle(i, s, p);
                    break;
                }
            }
        }
        for (auto& r : runners) r->close();
    } else {
        std::vector<std::size_t> pending(samples.size());
        for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

        for (std::size_t s = 0; s < k && !pending.empty(); ++s) {
            std::vector<Sample> batch;
            batch.reserve(pending.size());
            for (auto i : pending) batch.push_back(samples[i]);

            auto runner = start_runner(s);
            handshake(*runner, config.chain[s].name, s);
            const auto preds = runner->predict(batch);
            runner->close();
            runner.reset();

            report.stage_invocations[s] += static_cast<std::int64_t>(batch.size());
            std::vector<std::size_t> next;
            for (std::size_t j = 0; j < pending.size(); ++j) {
                if (stage_answers(s, k, preds[j].confidence, config.thresholds)) settle(pending[j], s, preds[j]);
                else next.push_back(pending[j]);
            }
            pending = std::move(next);
        }
    }

    for (std::size_t s = 0; s < k; ++s)
        report.total_gmacs += static_cast<double>(report.stage_invocations[s]) * config.chain[s].macs_per_sample;
    report.expected_gmacs = expected_macs_from_counts(config.chain, report.stage_counts);
    report.wall_time = std::chrono::steady_clock::now() - started;
    return report;
}

ExecutionReport execute(std::span<const Sample> samples, const CascadeConfig& config,
                        std::span<const RunnerSpec> runners, MemoryPolicy policy) {
    if (runners.size() != config.stages())
        throw ConfigError("need one runner per stage: " + std::to_string(config.stages()) + " stages, " +
                          std::to_string(runners.size()) + " runners");
    return execute(samples, config, [&](std::size_t stage) { return make_runner(runners[stage], stage); }, policy);
}

}  // namespace cascade
