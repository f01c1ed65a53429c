#pragma once

// Wire adapter for out-of-process backends. A backend is a long-running
// child process that reads one JSON object per line on stdin and answers
// with one JSON object per line on stdout. Calls are serialized per process.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <string>

#include <json.hpp>

#include "bizcorpus/errors.hpp"

namespace bizcorpus {

class JsonTransport {
 public:
  virtual ~JsonTransport() = default;
  /// One request, one response. Throws BackendError on failure or timeout.
  virtual nlohmann::json call(const nlohmann::json& request) = 0;
};

class ProcessTransport final : public JsonTransport {
 public:
  /// `command` runs under /bin/sh -c.
  explicit ProcessTransport(std::string command,
                            std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : command_(std::move(command)), timeout_(timeout) {
    // A dead child must surface as a write error, not kill the process.
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
  }

  ~ProcessTransport() override { stop(); }

  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  nlohmann::json call(const nlohmann::json& request) override {
    std::lock_guard lock(mutex_);
    if (pid_ <= 0) start();
    std::string line = request.dump() + "\n";
    if (!write_all(line)) {
      stop();
      throw BackendError("backend '" + command_ + "' closed its input");
    }
    std::string response;
    if (!read_line(response)) {
      stop();
      throw BackendError("backend '" + command_ + "' " + read_failure_);
    }
    try {
      auto j = nlohmann::json::parse(response);
      if (j.is_object() && j.contains("error")) {
        throw BackendError("backend '" + command_ + "' reported: " + j["error"].dump());
      }
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw BackendError("backend '" + command_ + "' sent malformed response: " + e.what());
    }
  }

  const std::string& command() const noexcept { return command_; }

 private:
  void start() {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw BackendError("pipe: " + std::string(std::strerror(errno)));
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BackendError("pipe: " + std::string(std::strerror(errno)));
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw BackendError("fork: " + std::string(std::strerror(errno)));
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    buffer_.clear();
  }

  void stop() noexcept {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ > 0) {
      ::kill(pid_, SIGTERM);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }

  bool write_all(const std::string& data) {
    std::size_t off = 0;
    bool ok = true;
    while (off < data.size()) {
      const ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        ok = false;
        break;
      }
      off += static_cast<std::size_t>(n);
    }
    return ok;
  }

  bool read_line(std::string& line) {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        read_failure_ = "timed out after " + std::to_string(timeout_.count()) + " ms";
        return false;
      }
      pollfd pfd{out_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) continue;
      if (rc < 0) {
        read_failure_ = "poll failed";
        return false;
      }
      char chunk[4096];
      const ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        read_failure_ = "exited without responding";
        return false;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::string read_failure_;
};

}  // namespace bizcorpus
