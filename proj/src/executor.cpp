#include "codetool/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>

extern char** environ;

namespace codetool {

namespace {

using SteadyClock = std::chrono::steady_clock;

std::int64_t elapsed_ms(SteadyClock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - since).count();
}

std::filesystem::path make_work_dir(const RunnerConfig& cfg) {
  std::filesystem::path root = cfg.work_root.empty()
                                   ? std::filesystem::temp_directory_path() / "codetool-runs"
                                   : cfg.work_root;
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw StorageError("cannot create " + root.string() + ": " + ec.message());
  std::string tmpl = (root / "run-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw StorageError("mkdtemp failed under " + root.string() + ": " + std::strerror(errno));
  }
  return tmpl;
}

std::vector<std::string> build_argv(const std::vector<std::string>& command, const std::string& program) {
  static constexpr std::string_view slot = "{program}";
  std::vector<std::string> argv;
  bool substituted = false;
  for (auto arg : command) {
    for (auto pos = arg.find(slot); pos != std::string::npos; pos = arg.find(slot, pos + program.size())) {
      arg.replace(pos, slot.size(), program);
      substituted = true;
    }
    argv.push_back(std::move(arg));
  }
  if (!substituted) argv.push_back(program);
  return argv;
}

std::vector<std::string> build_env(const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> merged;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view kv(*e);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    merged[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) merged[k] = v;
  std::vector<std::string> out;
  out.reserve(merged.size());
  for (const auto& [k, v] : merged) out.push_back(k + "=" + v);
  return out;
}

std::vector<char*> c_array(std::vector<std::string>& items) {
  std::vector<char*> out;
  out.reserve(items.size() + 1);
  for (auto& s : items) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

ExecutionReport runner_failure(std::string message, std::int64_t duration) {
  ExecutionReport r;
  r.status = ExecutionStatus::runner_failure;
  r.exception = ExceptionInfo{"RunnerFailure", std::move(message), {}};
  r.duration_ms = duration;
  return r;
}

std::string tail(const std::string& text, std::size_t n) {
  return text.size() <= n ? text : "..." + text.substr(text.size() - n);
}

struct Fd {
  int fd = -1;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

// Reads whatever is available; returns false at EOF.
bool drain(int fd, std::string& sink) {
  char buf[8192];
  while (true) {
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0) {
      sink.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) return false;
    if (errno == EINTR) continue;
    return errno == EAGAIN || errno == EWOULDBLOCK;
  }
}

}  // namespace

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> out;
  std::string current;
  bool have = false;
  char quote = '\0';
  for (char c : command) {
    if (quote != '\0') {
      if (c == quote) {
        quote = '\0';
      } else {
        current += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      have = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (have) out.push_back(std::move(current));
      current.clear();
      have = false;
    } else {
      current += c;
      have = true;
    }
  }
  if (have) out.push_back(std::move(current));
  return out;
}

ExecutionReport parse_result_document(std::string_view text, std::string_view program_path) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("result document is not a single JSON value: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("result document must be a JSON object");
  ExecutionReport r;
  try {
    const auto status = doc.at("status").get<std::string>();
    if (doc.contains("stdout_text")) {
      r.stdout_text = doc["stdout_text"].get<std::string>();
    } else if (doc.contains("stdout")) {
      r.stdout_text = doc["stdout"].get<std::string>();
    }
    if (status == "ok") {
      r.status = ExecutionStatus::ok;
      r.answer = last_nonempty_line(r.stdout_text);
    } else if (status == "exception") {
      r.status = ExecutionStatus::exception;
      const Json& ex = doc.at("exception");
      ExceptionInfo info;
      info.type_name = ex.at("type").get<std::string>();
      info.message = ex.value("message", "");
      for (const Json& f : ex.at("frames")) {
        StackFrame frame;
        frame.file = f.value("file", "");
        frame.line = f.at("line").get<int>();
        frame.function = f.value("func", "");
        frame.source_line = f.value("code", "");
        if (!program_path.empty() && frame.file == program_path) frame.file = kProgramFileName;
        info.frames.push_back(std::move(frame));
      }
      r.exception = std::move(info);
    } else {
      throw ParseError("unknown result status '" + status + "'");
    }
    r.duration_ms = std::max<std::int64_t>(0, doc.value("duration_ms", std::int64_t{0}));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed result document: ") + e.what());
  }
  try {
    validate(r);
  } catch (const ValidationError& e) {
    throw ParseError(std::string("inconsistent result document: ") + e.what());
  }
  return r;
}

ExecutionReport execute(const GeneratedProgram& program, const RunnerConfig& cfg) {
  if (program.source.empty()) throw ValidationError("program source is empty");
  if (cfg.command.empty()) throw ValidationError("runner command is empty");
  if (cfg.timeout_ms <= 0) throw ValidationError("timeout_ms must be positive");

  const auto work_dir = make_work_dir(cfg);
  const auto program_path = (work_dir / kProgramFileName).string();
  {
    std::ofstream out(program_path, std::ios::binary);
    out << program.source;
    if (!out) throw StorageError("cannot write " + program_path);
  }

  auto argv_strings = build_argv(cfg.command, program_path);
  // relative runner paths resolve against the caller's cwd
  if (argv_strings[0].find('/') != std::string::npos && !std::filesystem::path(argv_strings[0]).is_absolute()) {
    argv_strings[0] = std::filesystem::absolute(argv_strings[0]).string();
  }
  auto env_strings = build_env(cfg.env);
  auto argv = c_array(argv_strings);
  auto envp = c_array(env_strings);

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw StorageError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    throw StorageError(std::string("pipe: ") + std::strerror(errno));
  }
  Fd out_r{out_pipe[0]}, out_w{out_pipe[1]}, err_r{err_pipe[0]}, err_w{err_pipe[1]};

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&actions, out_w.fd, 1);
  posix_spawn_file_actions_adddup2(&actions, err_w.fd, 2);
  posix_spawn_file_actions_addchdir_np(&actions, work_dir.c_str());

  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t default_signals;
  sigset_t empty_mask;
  sigfillset(&default_signals);
  sigemptyset(&empty_mask);
  posix_spawnattr_setsigdefault(&attr, &default_signals);
  posix_spawnattr_setsigmask(&attr, &empty_mask);
  posix_spawnattr_setpgroup(&attr, 0);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF | POSIX_SPAWN_SETSIGMASK);

  const auto started = SteadyClock::now();
  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  out_w.reset();
  err_w.reset();
  if (rc != 0) {
    return runner_failure("cannot start runner '" + argv_strings[0] + "': " + std::strerror(rc),
                          elapsed_ms(started));
  }

  ::fcntl(out_r.fd, F_SETFL, O_NONBLOCK);
  ::fcntl(err_r.fd, F_SETFL, O_NONBLOCK);

  const auto deadline = started + std::chrono::milliseconds(cfg.timeout_ms);
  std::string out_text;
  std::string err_text;
  bool out_open = true;
  bool err_open = true;
  bool exited = false;
  bool timed_out = false;
  int wait_status = 0;

  while (out_open || err_open || !exited) {
    const auto now = SteadyClock::now();
    if (now >= deadline) {
      timed_out = !exited;
      break;
    }
    if (!exited) {
      const pid_t w = ::waitpid(pid, &wait_status, WNOHANG);
      if (w == pid) {
        exited = true;
        ::kill(-pid, SIGKILL);  // leftovers in the runner's process group
      }
    }
    pollfd fds[2];
    nfds_t n = 0;
    if (out_open) fds[n++] = {out_r.fd, POLLIN, 0};
    if (err_open) fds[n++] = {err_r.fd, POLLIN, 0};
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    const int wait_ms = static_cast<int>(std::min<std::int64_t>(left, exited ? 50 : 20));
    if (n == 0) {
      ::usleep(static_cast<useconds_t>(std::max(1, wait_ms)) * 1000);
      continue;
    }
    ::poll(fds, n, std::max(1, wait_ms));
    if (out_open) out_open = drain(out_r.fd, out_text);
    if (err_open) err_open = drain(err_r.fd, err_text);
  }

  if (!exited) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    while (::waitpid(pid, &wait_status, 0) < 0 && errno == EINTR) {
    }
  } else {
    ::kill(-pid, SIGKILL);
  }
  const std::int64_t duration = elapsed_ms(started);

  if (timed_out) {
    ExecutionReport r;
    r.status = ExecutionStatus::timeout;
    r.duration_ms = duration;
    return r;
  }
  if (out_open || err_open) {
    // deadline hit after the runner itself finished, with a descendant still
    // holding the pipes; its output so far is all there is
    drain(out_r.fd, out_text);
  }

  ExecutionReport report;
  const int exit_code = WIFEXITED(wait_status) ? WEXITSTATUS(wait_status) : 128 + WTERMSIG(wait_status);
  try {
    report = parse_result_document(out_text, program_path);
    report.duration_ms = duration;
  } catch (const ParseError& e) {
    std::string msg = exit_code != 0 ? "runner exited with code " + std::to_string(exit_code)
                                     : std::string("runner produced no valid result document");
    msg += std::string(" (") + e.what() + ")";
    if (!err_text.empty()) msg += "; stderr: " + tail(err_text, 2000);
    return runner_failure(std::move(msg), duration);
  }

  if (report.status == ExecutionStatus::ok) {
    std::error_code ec;
    std::filesystem::remove_all(work_dir, ec);
  }
  return report;
}

}  // namespace codetool
