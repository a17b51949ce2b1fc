#pragma once

#include <cstddef>
#include <memory>

#include "cascade/runtime_executor.hpp"

namespace cascade::detail {

/// Spawns the runner process with its stdin/stdout connected to pipes.
/// Throws RunnerError(startup) if the command cannot be executed.
std::unique_ptr<ModelRunner> start_subprocess_runner(const SubprocessRunnerSpec& spec, std::size_t stage);

}  // namespace cascade::detail
