#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace cascade {

/// Base for every error raised by the toolkit. Callers that only need a
/// message can catch this; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Misconfiguration detected before any work is done (bad manifest, unknown
/// model name, inconsistent chain). The CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A record or profile file violates its format. `line()` is 1-based; 0 when
/// the error is not tied to a line.
class FormatError : public Error {
public:
    FormatError(std::string path, std::size_t line, const std::string& what)
        : Error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
          path_(std::move(path)),
          line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Failure talking to a model runner. `kind()` lets callers tell a timeout
/// apart from a crash or a name mismatch.
class RunnerError : public Error {
public:
    enum class Kind { crash, timeout, protocol, name_mismatch, startup };

    RunnerError(Kind kind, std::size_t stage, const std::string& what)
        : Error("stage " + std::to_string(stage) + ": " + what), kind_(kind), stage_(stage) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t stage() const noexcept { return stage_; }

private:
    Kind kind_;
    std::size_t stage_;
};

}  // namespace cascade
