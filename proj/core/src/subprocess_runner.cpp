#include "subprocess_runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>

#include "cascade/errors.hpp"

namespace cascade::detail {

namespace {

using Clock = std::chrono::steady_clock;
using Kind = RunnerError::Kind;

Clock::time_point deadline_after(double seconds) {
    return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

int millis_until(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class SubprocessRunner final : public ModelRunner {
public:
    SubprocessRunner(const SubprocessRunnerSpec& spec, std::size_t stage) : spec_(spec), stage_(stage) {
        if (spec.command.empty()) throw RunnerError(Kind::startup, stage, "empty runner command");
        ignore_sigpipe_once();
        spawn();
    }

    ~SubprocessRunner() override {
        try {
            close();
        } catch (...) {
        }
    }

    std::string hello() override {
        send_all("HELLO\n", deadline_after(spec_.startup_timeout_s), "handshake");
        const auto line = read_line(deadline_after(spec_.startup_timeout_s), "handshake");
        constexpr std::string_view prefix = "MODEL ";
        if (line.rfind(prefix, 0) != 0 || line.size() == prefix.size())
            throw RunnerError(Kind::protocol, stage_, "bad handshake reply '" + line + "'");
        return line.substr(prefix.size());
    }

    std::vector<StagePrediction> predict(std::span<const Sample> samples) override {
        std::string outgoing;
        std::unordered_map<std::string, std::size_t> position;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            outgoing += "PREDICT " + samples[i].id + " " + (samples[i].payload.empty() ? "-" : samples[i].payload) + "\n";
            position.emplace(samples[i].id, i);
        }

        std::vector<std::optional<StagePrediction>> results(samples.size());
        std::size_t remaining = samples.size();
        std::size_t sent = 0;
        auto deadline = deadline_after(spec_.response_timeout_s);

        auto first_pending = [&] {
            for (std::size_t i = 0; i < results.size(); ++i)
                if (!results[i]) return samples[i].id;
            return std::string();
        };

        while (remaining > 0) {
            std::string line;
            while (remaining > 0 && take_line(line)) {
                const auto parsed = parse_result_line(line);
                if (!parsed) throw RunnerError(Kind::protocol, stage_, "malformed runner output '" + line + "'");
                auto it = position.find(parsed->sample_id);
                if (it == position.end() || results[it->second])
                    throw RunnerError(Kind::protocol, stage_, "unexpected result for sample '" + parsed->sample_id + "'");
                results[it->second] = parsed->prediction;
                --remaining;
                deadline = deadline_after(spec_.response_timeout_s);
            }
            if (remaining == 0) break;

            pollfd fds[2] = {{from_child_, POLLIN, 0}, {to_child_, POLLOUT, 0}};
            const nfds_t nfds = sent < outgoing.size() ? 2 : 1;
            const int rc = ::poll(fds, nfds, millis_until(deadline));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw RunnerError(Kind::crash, stage_, std::string("poll failed: ") + std::strerror(errno));
            }
            if (rc == 0) {
                kill_child();
                throw RunnerError(Kind::timeout, stage_, "no response within " + std::to_string(spec_.response_timeout_s) +
                                                             "s while sample '" + first_pending() + "' was pending");
            }
            if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
                const auto n = ::write(to_child_, outgoing.data() + sent, std::min<std::size_t>(outgoing.size() - sent, 1 << 16));
                if (n > 0) sent += static_cast<std::size_t>(n);
                else if (n < 0 && errno != EAGAIN && errno != EINTR)
                    throw crashed("while sending sample '" + first_pending() + "'");
            }
            if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
                if (!fill_buffer()) throw crashed("while sample '" + first_pending() + "' was pending");
            }
        }

        std::vector<StagePrediction> out;
        out.reserve(results.size());
        for (auto& r : results) out.push_back(*r);
        return out;
    }

    void close() override {
        if (pid_ <= 0) return;
        if (to_child_ >= 0) {
            const char bye[] = "BYE\n";
            [[maybe_unused]] auto n = ::write(to_child_, bye, sizeof bye - 1);
            ::close(to_child_);
            to_child_ = -1;
        }
        const auto deadline = deadline_after(5.0);
        while (pid_ > 0 && Clock::now() < deadline) {
            if (reap(WNOHANG)) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        kill_child();
        if (from_child_ >= 0) {
            ::close(from_child_);
            from_child_ = -1;
        }
    }

private:
    void spawn() {
        int in_pipe[2], out_pipe[2], err_pipe[2];
        if (::pipe2(in_pipe, O_CLOEXEC) || ::pipe2(out_pipe, O_CLOEXEC) || ::pipe2(err_pipe, O_CLOEXEC))
            throw RunnerError(Kind::startup, stage_, std::string("pipe failed: ") + std::strerror(errno));

        std::vector<char*> argv;
        for (const auto& a : spec_.command) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        const std::string cwd = spec_.working_dir.string();

        pid_ = ::fork();
        if (pid_ < 0) throw RunnerError(Kind::startup, stage_, std::string("fork failed: ") + std::strerror(errno));
        if (pid_ == 0) {
            ::dup2(in_pipe[0], STDIN_FILENO);
            ::dup2(out_pipe[1], STDOUT_FILENO);
            if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
                const int e = errno;
                [[maybe_unused]] auto n = ::write(err_pipe[1], &e, sizeof e);
                ::_exit(127);
            }
            ::execvp(argv[0], argv.data());
            const int e = errno;
            [[maybe_unused]] auto n = ::write(err_pipe[1], &e, sizeof e);
            ::_exit(127);
        }

        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[1]);
        to_child_ = in_pipe[1];
        from_child_ = out_pipe[0];
        ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);

        int child_errno = 0;
        const auto n = ::read(err_pipe[0], &child_errno, sizeof child_errno);
        ::close(err_pipe[0]);
        if (n == sizeof child_errno) {
            reap(0);
            ::close(to_child_);
            ::close(from_child_);
            to_child_ = from_child_ = -1;
            throw RunnerError(Kind::startup, stage_,
                              "cannot start '" + spec_.command.front() + "': " + std::strerror(child_errno));
        }
    }

    bool reap(int flags) {
        int status = 0;
        const auto r = ::waitpid(pid_, &status, flags);
        if (r == pid_ || (r < 0 && errno == ECHILD)) {
            exit_status_ = status;
            pid_ = -1;
            return true;
        }
        return false;
    }

    void kill_child() {
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            reap(0);
        }
    }

    // Waits briefly for the child to finish dying and describes how it ended.
    std::string describe_exit() {
        for (int i = 0; i < 100 && pid_ > 0 && !reap(WNOHANG); ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        if (pid_ > 0) {
            kill_child();
            return "runner closed its output";
        }
        if (WIFEXITED(exit_status_)) return "runner exited with status " + std::to_string(WEXITSTATUS(exit_status_));
        if (WIFSIGNALED(exit_status_)) return "runner killed by signal " + std::to_string(WTERMSIG(exit_status_));
        return "runner exited";
    }

    RunnerError crashed(const std::string& context) {
        return RunnerError(Kind::crash, stage_, describe_exit() + " " + context);
    }

    // Reads whatever is available. False on EOF.
    bool fill_buffer() {
        char chunk[8192];
        for (;;) {
            const auto n = ::read(from_child_, chunk, sizeof chunk);
            if (n > 0) {
                buffer_.append(chunk, static_cast<std::size_t>(n));
                return true;
            }
            if (n == 0) return false;
            if (errno != EINTR) return false;
        }
    }

    bool take_line(std::string& line) {
        const auto nl = buffer_.find('\n');
        if (nl == std::string::npos) return false;
        line.assign(buffer_, 0, nl);
        buffer_.erase(0, nl + 1);
        return true;
    }

    std::string read_line(Clock::time_point deadline, const char* what) {
        std::string line;
        while (!take_line(line)) {
            pollfd fd{from_child_, POLLIN, 0};
            const int rc = ::poll(&fd, 1, millis_until(deadline));
            if (rc < 0 && errno == EINTR) continue;
            if (rc == 0) {
                kill_child();
                throw RunnerError(Kind::timeout, stage_, std::string("timed out waiting for ") + what);
            }
            if (!fill_buffer())
                throw RunnerError(Kind::startup, stage_, describe_exit() + " during " + what);
        }
        return line;
    }

    void send_all(std::string_view data, Clock::time_point deadline, const char* what) {
        while (!data.empty()) {
            pollfd fd{to_child_, POLLOUT, 0};
            const int rc = ::poll(&fd, 1, millis_until(deadline));
            if (rc < 0 && errno == EINTR) continue;
            if (rc == 0) {
                kill_child();
                throw RunnerError(Kind::timeout, stage_, std::string("timed out sending ") + what);
            }
            const auto n = ::write(to_child_, data.data(), data.size());
            if (n > 0) data.remove_prefix(static_cast<std::size_t>(n));
            else if (n < 0 && errno != EAGAIN && errno != EINTR)
                throw RunnerError(Kind::startup, stage_, describe_exit() + " during " + what);
        }
    }

    SubprocessRunnerSpec spec_;
    std::size_t stage_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    int exit_status_ = 0;
    std::string buffer_;
};

}  // namespace

std::unique_ptr<ModelRunner> start_subprocess_runner(const SubprocessRunnerSpec& spec, std::size_t stage) {
    return std::make_unique<SubprocessRunner>(spec, stage);
}

}  // namespace cascade::detail
