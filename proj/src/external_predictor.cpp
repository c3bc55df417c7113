#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>

#include "discover/error.hpp"
#include "discover/predict.hpp"

extern char** environ;

namespace discover {

struct ExternalPredictor::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  long long next_id = 0;
  std::string buffer;
  bool broken = false;

  ~Process() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    if (pid > 0) {
      // Closing stdin asks a well-behaved adapter to exit; give it a moment.
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid, &status, WNOHANG) == pid) return;
        ::usleep(2000);
      }
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
    }
  }
};

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t w = ::write(fd, data.data() + off, data.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw PredictorError(std::string("external predictor: write failed (") + std::strerror(errno) +
                           "); process likely exited");
    }
    off += static_cast<std::size_t>(w);
  }
}

}  // namespace

ExternalPredictor::ExternalPredictor(std::vector<std::string> command, ExternalOptions options)
    : command_(std::move(command)), options_(options) {
  if (command_.empty()) throw ArgumentError("external predictor: empty command");
  if (options_.pool_size == 0) options_.pool_size = 1;
  ignore_sigpipe();
  for (std::size_t i = 0; i < options_.pool_size; ++i) {
    auto proc = spawn();
    exchange(*proc, Matrix(0, 0));  // handshake
    idle_.push_back(std::move(proc));
  }
}

ExternalPredictor::~ExternalPredictor() = default;

std::unique_ptr<ExternalPredictor::Process> ExternalPredictor::spawn() const {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw PredictorError("external predictor: pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw PredictorError("external predictor: pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> argv;
  for (const auto& a : command_) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw PredictorError("external predictor: cannot start '" + command_[0] + "': " + std::strerror(rc));
  }
  auto proc = std::make_unique<Process>();
  proc->pid = pid;
  proc->to_child = in_pipe[1];
  proc->from_child = out_pipe[0];
  return proc;
}

std::vector<double> ExternalPredictor::exchange(Process& proc, const Matrix& rows) const {
  if (proc.broken) throw PredictorError("external predictor: process is no longer usable");
  const long long id = proc.next_id++;
  nlohmann::json rows_json = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.rows; ++i) {
    const auto r = rows.row(i);
    rows_json.push_back(std::vector<double>(r.begin(), r.end()));
  }
  const nlohmann::json request = {{"id", id}, {"rows", rows_json}};
  try {
    write_all(proc.to_child, request.dump() + "\n");
  } catch (...) {
    proc.broken = true;
    throw;
  }

  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  std::size_t newline;
  while ((newline = proc.buffer.find('\n')) == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      proc.broken = true;
      throw PredictorError("external predictor: timed out after " + std::to_string(options_.timeout.count()) +
                           " ms waiting for response " + std::to_string(id));
    }
    pollfd pfd{proc.from_child, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      proc.broken = true;
      throw PredictorError("external predictor: poll failed");
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t got = ::read(proc.from_child, chunk, sizeof chunk);
    if (got < 0) {
      if (errno == EINTR) continue;
      proc.broken = true;
      throw PredictorError("external predictor: read failed");
    }
    if (got == 0) {
      proc.broken = true;
      throw PredictorError("external predictor: process exited before answering request " + std::to_string(id));
    }
    proc.buffer.append(chunk, static_cast<std::size_t>(got));
  }
  const std::string line = proc.buffer.substr(0, newline);
  proc.buffer.erase(0, newline + 1);

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    proc.broken = true;
    throw PredictorError("external predictor: malformed response line: " + line.substr(0, 200));
  }
  if (!response.is_object()) {
    proc.broken = true;
    throw PredictorError("external predictor: response is not a JSON object");
  }
  if (response.contains("error")) {
    proc.broken = true;
    throw PredictorError("external predictor reported: " + response.at("error").dump());
  }
  if (!response.contains("id") || !response.at("id").is_number_integer() || response.at("id").get<long long>() != id) {
    proc.broken = true;
    throw PredictorError("external predictor: response id does not match request " + std::to_string(id));
  }
  if (!response.contains("outputs") || !response.at("outputs").is_array()) {
    proc.broken = true;
    throw PredictorError("external predictor: response lacks an 'outputs' array");
  }
  const auto& outputs = response.at("outputs");
  if (outputs.size() != rows.rows) {
    throw PredictorError("external predictor: expected " + std::to_string(rows.rows) + " outputs, got " +
                         std::to_string(outputs.size()));
  }
  std::vector<double> out;
  out.reserve(outputs.size());
  for (const auto& v : outputs) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw PredictorError("external predictor: non-numeric or non-finite output");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> ExternalPredictor::predict(const Matrix& rows) const {
  std::unique_ptr<Process> proc;
  {
    std::unique_lock lock(mutex_);
    available_.wait(lock, [&] { return !idle_.empty(); });
    proc = std::move(idle_.back());
    idle_.pop_back();
  }
  auto give_back = [&] {
    std::lock_guard lock(mutex_);
    idle_.push_back(std::move(proc));
    available_.notify_one();
  };
  try {
    auto out = exchange(*proc, rows);
    give_back();
    return out;
  } catch (...) {
    give_back();
    throw;
  }
}

nlohmann::json ExternalPredictor::to_json() const {
  return {{"external", command_},
          {"timeout_s", static_cast<double>(options_.timeout.count()) / 1000.0},
          {"pool", options_.pool_size}};
}

}  // namespace discover
