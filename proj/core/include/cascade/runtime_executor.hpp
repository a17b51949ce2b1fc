#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cascade/cascade_engine.hpp"
#include "cascade/record_store.hpp"

namespace cascade {

/// Answers from recorded predictions instead of a live model.
struct ReplayRunnerSpec {
    std::filesystem::path records;
    std::string model_name;
};

/// A child process speaking the line protocol on stdin/stdout.
struct SubprocessRunnerSpec {
    std::vector<std::string> command;  // argv; command[0] is looked up on PATH
    std::filesystem::path working_dir;
    double startup_timeout_s = 30.0;
    double response_timeout_s = 60.0;
};

using RunnerSpec = std::variant<ReplayRunnerSpec, SubprocessRunnerSpec>;

struct Sample {
    std::string id;
    std::string payload;  // path handed to the runner; "-" when there is none
};

struct StagePrediction {
    Label predicted_label = 0;
    double confidence = 0.0;
};

/// One model stage at inference time. Implementations must answer every
/// sample of a batch; order of arrival is not significant.
class ModelRunner {
public:
    virtual ~ModelRunner() = default;

    /// Performs the handshake and returns the runner's declared model name.
    virtual std::string hello() = 0;
    /// Results are returned in the order of `samples`.
    virtual std::vector<StagePrediction> predict(std::span<const Sample> samples) = 0;
    /// Ends the session. Safe to call more than once.
    virtual void close() = 0;
};

/// Starts (but does not handshake) a runner for chain position `stage`.
std::unique_ptr<ModelRunner> make_runner(const RunnerSpec& spec, std::size_t stage);

/// Handshake against an already started runner; throws RunnerError
/// (name_mismatch) when the declared name differs from `expected_name`.
std::string handshake(ModelRunner& runner, const std::string& expected_name, std::size_t stage);
/// Starts the runner, handshakes, and shuts it down again.
std::string handshake(const RunnerSpec& spec, std::size_t stage = 0);

enum class MemoryPolicy {
    /// Every stage's runner is live for the whole run; samples walk the chain
    /// one at a time.
    resident,
    /// One runner at a time: stage i processes every sample that reaches it
    /// before stage i+1 is started.
    swap,
};

std::optional<MemoryPolicy> parse_memory_policy(std::string_view text);
const char* to_string(MemoryPolicy policy);

struct SampleOutcome {
    std::string sample_id;
    std::size_t stage = 0;
    Label predicted_label = 0;
    double confidence = 0.0;  // of the answering stage
};

struct ExecutionReport {
    std::vector<SampleOutcome> outcomes;  // input order
    std::vector<std::int64_t> stage_counts;
    /// Number of samples each stage was invoked on.
    std::vector<std::int64_t> stage_invocations;
    /// Sum over invocations of the stage's profiled GMACs.
    double total_gmacs = 0.0;
    /// Per-sample average, same formula as cascade evaluation.
    double expected_gmacs = 0.0;
    std::chrono::duration<double> wall_time{0};
};

/// Runs the cascade over `samples`. One runner spec per chain stage; each
/// runner must announce the name of its stage's profile.
ExecutionReport execute(std::span<const Sample> samples, const CascadeConfig& config,
                        std::span<const RunnerSpec> runners, MemoryPolicy policy);

/// Starts the runner for a stage. Called at most once per stage per run, at
/// the point the policy needs that stage live.
using RunnerFactory = std::function<std::unique_ptr<ModelRunner>(std::size_t stage)>;

ExecutionReport execute(std::span<const Sample> samples, const CascadeConfig& config,
                        const RunnerFactory& start_runner, MemoryPolicy policy);

/// Parses one `RESULT <id> <label> <confidence>` line. Returns nullopt when
/// the line does not follow the format exactly.
struct ResultLine {
    std::string sample_id;
    StagePrediction prediction;
};
std::optional<ResultLine> parse_result_line(std::string_view line);
std::string format_result_line(const std::string& sample_id, const StagePrediction& prediction);

}  // namespace cascade
