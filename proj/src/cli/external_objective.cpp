#include "cocabo/cli/external_objective.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "cocabo/errors.hpp"

extern char** environ;

namespace cocabo::cli {

using nlohmann::json;

std::string encode_request(const MixedPoint& z) {
  json j;
  j["h"] = std::vector<int>(z.h.data(), z.h.data() + z.h.size());
  j["x"] = std::vector<double>(z.x.data(), z.x.data() + z.x.size());
  return j.dump();
}

double decode_response(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception&) {
    throw EvaluationError("malformed response from external objective: " + line);
  }
  if (!j.is_object() || !j.contains("f") || !j["f"].is_number())
    throw EvaluationError("response lacks a numeric \"f\": " + line);
  const double f = j["f"].get<double>();
  if (!std::isfinite(f)) throw EvaluationError("external objective returned a non-finite value");
  return f;
}

ExternalObjective::ExternalObjective(const std::string& command, double timeout_s) : timeout_s_(timeout_s) {
  require(timeout_s > 0.0, "timeout must be positive");
  // A dead child must surface as EPIPE rather than killing us.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw EvaluationError("pipe failed");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw EvaluationError("pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::string shell = "/bin/sh", flag = "-c", cmd = command;
  char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    throw EvaluationError(std::string("cannot spawn external objective: ") + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ExternalObjective::~ExternalObjective() { shutdown(false); }

void ExternalObjective::shutdown(bool kill_child) {
  if (to_child_ >= 0) close(to_child_);
  to_child_ = -1;
  if (pid_ > 0) {
    if (kill_child) kill(pid_, SIGKILL);
    // Closing stdin asks a well-behaved child to exit; give it a moment.
    int status = 0;
    for (int i = 0; i < 200 && waitpid(pid_, &status, WNOHANG) == 0; ++i) usleep(10000);
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) close(from_child_);
  from_child_ = -1;
}

std::string ExternalObjective::read_line() {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(timeout_s_);
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) throw EvaluationError("external objective timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1 << 30)));
    if (ready < 0 && errno == EINTR) continue;
    if (ready < 0) throw EvaluationError("poll failed while waiting for the external objective");
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw EvaluationError("external objective closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

double ExternalObjective::operator()(const MixedPoint& z) {
  if (broken_ || pid_ <= 0) throw EvaluationError("external objective is no longer running");
  try {
    const std::string request = encode_request(z) + "\n";
    std::size_t sent = 0;
    while (sent < request.size()) {
      const ssize_t n = write(to_child_, request.data() + sent, request.size() - sent);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw EvaluationError("cannot write to the external objective");
      sent += static_cast<std::size_t>(n);
    }
    ++requests_;
    return decode_response(read_line());
  } catch (const EvaluationError&) {
    broken_ = true;
    shutdown(true);
    throw;
  }
}

}  // namespace cocabo::cli
