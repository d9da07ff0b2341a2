#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "vfocus/errors.hpp"
#include "vfocus/predictor.hpp"

extern char** environ;

namespace vfocus {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string sys_error(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

const RgbImage& require_image(const Query& q) {
  if (!q.image) throw InvalidInput("remote predictors need the composed image");
  return *q.image;
}

}  // namespace

struct StdioPredictor::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;
  bool broken = false;

  ~Process() {
    if (to_child >= 0) ::close(to_child);
    if (pid > 0) {
      // Closing stdin asks the server to exit; give it a moment before killing it.
      int status = 0;
      for (int i = 0; i < 100; ++i) {
        if (::waitpid(pid, &status, WNOHANG) == pid) {
          pid = -1;
          break;
        }
        ::usleep(10'000);
      }
      if (pid > 0) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
      }
    }
    if (from_child >= 0) ::close(from_child);
  }

  void write_all(std::string_view data, std::chrono::milliseconds timeout) {
    while (!data.empty()) {
      pollfd pfd{to_child, POLLOUT, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (ready == 0) throw PredictorError(PredictorFailure::Timeout, "model process stopped reading");
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw PredictorError(PredictorFailure::Transport, sys_error("poll"));
      }
      const ssize_t n = ::write(to_child, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw PredictorError(PredictorFailure::Transport, sys_error("write to model process"));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  /// Blocks until one complete line is buffered.
  std::string read_line(std::chrono::milliseconds timeout) {
    for (;;) {
      const auto nl = buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        return line;
      }
      pollfd pfd{from_child, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (ready == 0) throw PredictorError(PredictorFailure::Timeout, "model process did not answer in time");
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw PredictorError(PredictorFailure::Transport, sys_error("poll"));
      }
      char chunk[4096];
      const ssize_t n = ::read(from_child, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw PredictorError(PredictorFailure::Transport, sys_error("read from model process"));
      }
      if (n == 0) throw PredictorError(PredictorFailure::Transport, "model process closed its output");
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

StdioPredictor::StdioPredictor(std::vector<std::string> argv, RemoteOptions options)
    : options_(options), process_(std::make_unique<Process>()) {
  if (argv.empty()) throw InvalidInput("no model program given");
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  ignore_sigpipe();

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw PredictorError(PredictorFailure::Transport, sys_error("pipe"));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw PredictorError(PredictorFailure::Transport, sys_error("pipe"));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw PredictorError(PredictorFailure::Transport,
                         "cannot start " + argv[0] + ": " + std::strerror(rc));
  }
  process_->pid = pid;
  process_->to_child = in_pipe[1];
  process_->from_child = out_pipe[0];
}

StdioPredictor::~StdioPredictor() = default;

Label StdioPredictor::predict(const Query& query) {
  return predict_batch(std::span<const Query>(&query, 1)).front();
}

std::vector<Label> StdioPredictor::predict_batch(std::span<const Query> queries) {
  if (queries.empty()) throw InvalidInput("predict_batch called with no queries");
  for (const auto& q : queries) require_image(q);

  std::lock_guard lock(mutex_);
  Process& proc = *process_;
  if (proc.broken) throw PredictorError(PredictorFailure::Transport, "model process is unusable after an earlier failure");

  const std::size_t first_id = next_id_;
  next_id_ += queries.size();
  std::vector<Label> out(queries.size());
  std::unordered_map<std::string, std::size_t> pending;
  std::size_t sent = 0;
  std::size_t received = 0;

  try {
    while (received < queries.size()) {
      while (sent < queries.size() && pending.size() < options_.max_in_flight) {
        const std::string id = "q" + std::to_string(first_id + sent);
        proc.write_all(encode_request(id, *queries[sent].image) + "\n", options_.timeout);
        pending.emplace(id, sent);
        ++sent;
      }
      const std::string line = proc.read_line(options_.timeout);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Response r = decode_response(line);
      auto it = pending.find(r.id);
      if (it == pending.end())
        throw PredictorError(PredictorFailure::Malformed, "response for unknown id '" + r.id + "'");
      const std::size_t index = it->second;
      pending.erase(it);
      if (!r.error.empty())
        throw PredictorError(PredictorFailure::Model, "model error for query " + r.id + ": " + r.error, index);
      out[index] = Label(std::move(r.label));
      ++received;
    }
  } catch (const PredictorError& e) {
    proc.broken = true;
    if (e.batch_index()) throw;
    // Attribute transport-level failures to the oldest outstanding request.
    std::optional<std::size_t> index;
    for (const auto& [id, i] : pending)
      if (!index || i < *index) index = i;
    throw PredictorError(e.kind(), e.what(), index);
  }
  return out;
}

HttpPredictor::HttpPredictor(std::string url, RemoteOptions options) : options_(options) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.substr(0, scheme) != "http")
    throw InvalidInput("only http:// model URLs are supported: " + url);
  const auto slash = url.find('/', scheme + 3);
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  if (origin_.size() <= scheme + 3) throw InvalidInput("model URL has no host: " + url);
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

Label HttpPredictor::post(const Query& query, std::size_t sequence) const {
  const std::string id = "q" + std::to_string(sequence);
  httplib::Client client(origin_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_, encode_request(id, require_image(query)), "application/json");
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                           (res.error() == httplib::Error::Read && elapsed >= options_.timeout);
    throw PredictorError(timed_out ? PredictorFailure::Timeout : PredictorFailure::Transport,
                         "POST " + origin_ + path_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    std::string detail = "HTTP " + std::to_string(res->status);
    try {
      Response r = decode_response(res->body);
      if (!r.error.empty()) throw PredictorError(PredictorFailure::Model, detail + ": " + r.error);
    } catch (const PredictorError& e) {
      if (e.kind() == PredictorFailure::Model) throw;
    }
    throw PredictorError(PredictorFailure::Transport, detail + " from " + origin_ + path_);
  }
  Response r = decode_response(res->body);
  if (r.id != id)
    throw PredictorError(PredictorFailure::Malformed, "response id '" + r.id + "' does not match '" + id + "'");
  if (!r.error.empty()) throw PredictorError(PredictorFailure::Model, "model error for " + id + ": " + r.error);
  return Label(std::move(r.label));
}

Label HttpPredictor::predict(const Query& query) {
  return predict_batch(std::span<const Query>(&query, 1)).front();
}

std::vector<Label> HttpPredictor::predict_batch(std::span<const Query> queries) {
  if (queries.empty()) throw InvalidInput("predict_batch called with no queries");
  for (const auto& q : queries) require_image(q);

  std::vector<Label> out(queries.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::optional<PredictorError> error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= queries.size() || failed.load()) return;
      try {
        out[i] = post(queries[i], i);
      } catch (const PredictorError& e) {
        std::lock_guard lock(error_mutex);
        failed = true;
        if (!error || i < *error->batch_index()) error.emplace(e.kind(), e.what(), i);
      }
    }
  };

  const std::size_t workers = std::min(options_.max_in_flight, queries.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) throw *error;
  return out;
}

}  // namespace vfocus
