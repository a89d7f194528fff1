#include "nexcv/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "nexcv/error.hpp"

extern char** environ;

namespace nexcv {
namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() > 0 ? static_cast<int>(left.count()) : 0;
}

}  // namespace

ExternalClassifier::ExternalClassifier(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  ignore_sigpipe();

  int in_pipe[2];   // parent -> child stdin
  int out_pipe[2];  // child stdout -> parent
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw AdapterError(AdapterError::Kind::ProcessExit,
                       fmt::format("pipe failed: {}", std::strerror(errno)));
  }
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw AdapterError(AdapterError::Kind::ProcessExit,
                       fmt::format("pipe failed: {}", std::strerror(errno)));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::string shell = "/bin/sh";
  std::string flag = "-c";
  char* argv[] = {shell.data(), flag.data(), command_.data(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    pid_ = -1;
    throw AdapterError(AdapterError::Kind::ProcessExit,
                       fmt::format("cannot start '{}': {}", command_, std::strerror(rc)));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);
}

ExternalClassifier::~ExternalClassifier() { shutdown(); }

void ExternalClassifier::shutdown() noexcept {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0 && !exited_) {
    // Closing stdin asks the engine to exit; give it a moment before killing.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &exit_status_, WNOHANG) == pid_) {
        exited_ = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    if (!exited_) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &exit_status_, 0);
      exited_ = true;
    }
  }
}

std::string ExternalClassifier::exit_description() {
  if (!exited_ && pid_ > 0) {
    for (int i = 0; i < 100 && !exited_; ++i) {
      if (::waitpid(pid_, &exit_status_, WNOHANG) == pid_) {
        exited_ = true;
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
    }
  }
  if (!exited_) return "closed its output";
  if (WIFEXITED(exit_status_)) return fmt::format("exited with status {}", WEXITSTATUS(exit_status_));
  if (WIFSIGNALED(exit_status_)) return fmt::format("killed by signal {}", WTERMSIG(exit_status_));
  return "terminated";
}

void ExternalClassifier::send_line(const std::string& line) {
  if (to_child_ < 0) throw AdapterError(AdapterError::Kind::ProcessExit, "engine process is gone");
  const std::string payload = line + "\n";
  const auto deadline = Clock::now() + timeout_;
  std::size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n = ::write(to_child_, payload.data() + written, payload.size() - written);
    if (n > 0) {
      written += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      pollfd pfd{to_child_, POLLOUT, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready == 0) {
        throw AdapterError(AdapterError::Kind::Timeout,
                           fmt::format("timed out after {} ms writing a request to '{}'",
                                       timeout_.count(), command_));
      }
      continue;
    }
    throw AdapterError(AdapterError::Kind::ProcessExit,
                       fmt::format("engine '{}' {} before reading the request", command_,
                                   exit_description()));
  }
}

std::string ExternalClassifier::read_line() {
  const auto deadline = Clock::now() + timeout_;
  while (true) {
    if (const auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ++responses_read_;
      return line;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) {
      throw AdapterError(AdapterError::Kind::Timeout,
                         fmt::format("timed out after {} ms waiting for response line {} from '{}'",
                                     timeout_.count(), responses_read_ + 1, command_));
    }
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      throw AdapterError(AdapterError::Kind::ProcessExit,
                         fmt::format("engine '{}' {} before response line {}", command_,
                                     exit_description(), responses_read_ + 1));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string ExternalClassifier::round_trip(const std::string& request) {
  send_line(request);
  return read_line();
}

namespace {

json parse_response(const std::string& line, std::size_t line_no) {
  json response;
  try {
    response = json::parse(line);
  } catch (const json::parse_error&) {
    throw AdapterError(AdapterError::Kind::Protocol,
                       fmt::format("response line {} is not valid JSON: {}", line_no, line));
  }
  if (!response.is_object()) {
    throw AdapterError(AdapterError::Kind::Protocol,
                       fmt::format("response line {} is not a JSON object: {}", line_no, line));
  }
  if (const auto ok = response.find("ok"); ok != response.end() && *ok == false) {
    const auto err = response.value("error", json("unspecified error"));
    throw AdapterError(AdapterError::Kind::Engine,
                       fmt::format("engine reported an error on response line {}: {}", line_no,
                                   err.is_string() ? err.get<std::string>() : err.dump()));
  }
  return response;
}

}  // namespace

void ExternalClassifier::fit(std::span<const LabeledExample> train) {
  json request = {{"op", "fit"}, {"examples", json::array()}};
  auto& examples = request["examples"];
  for (const auto& ex : train) examples.push_back({{"text", ex.text}, {"label", ex.label}});
  const auto line = round_trip(request.dump());
  const auto response = parse_response(line, responses_read_);
  if (response.value("ok", json()) != true) {
    throw AdapterError(AdapterError::Kind::Protocol,
                       fmt::format("response line {} does not acknowledge fit: {}",
                                   responses_read_, line));
  }
  fitted_ = true;
}

Prediction ExternalClassifier::predict(std::string_view text) {
  if (!fitted_) throw ClassifierError("predict called before fit");
  const json request = {{"op", "predict"}, {"text", text}};
  const auto line = round_trip(request.dump());
  const auto response = parse_response(line, responses_read_);
  const auto label = response.find("label");
  const auto confidence = response.find("confidence");
  if (label == response.end() || !label->is_string() || confidence == response.end() ||
      !confidence->is_number()) {
    throw AdapterError(AdapterError::Kind::Protocol,
                       fmt::format("response line {} lacks a string \"label\" and numeric "
                                   "\"confidence\": {}",
                                   responses_read_, line));
  }
  return {label->get<std::string>(), confidence->get<double>()};
}

ClassifierFactory external_factory(std::string command, std::chrono::milliseconds timeout) {
  return [command = std::move(command), timeout] {
    return std::make_unique<ExternalClassifier>(command, timeout);
  };
}

void serve_line_protocol(std::istream& in, std::ostream& out, const ClassifierFactory& make) {
  std::unique_ptr<Classifier> model;
  std::string line;
  auto reply = [&](const json& response) { out << response.dump() << '\n' << std::flush; };
  auto fail = [&](const std::string& message) { reply({{"ok", false}, {"error", message}}); };

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json request;
    try {
      request = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(fmt::format("invalid JSON request: {}", e.what()));
      continue;
    }
    const auto op = request.value("op", std::string());
    try {
      if (op == "fit") {
        std::vector<LabeledExample> examples;
        for (const auto& ex : request.at("examples")) {
          examples.push_back({ex.at("text").get<std::string>(), ex.at("label").get<std::string>()});
        }
        model = make();
        model->fit(examples);
        reply({{"ok", true}});
      } else if (op == "predict") {
        if (!model) throw ClassifierError("predict before fit");
        const auto p = model->predict(request.at("text").get<std::string>());
        reply({{"label", p.label}, {"confidence", p.confidence}});
      } else {
        fail(fmt::format("unknown op '{}'", op));
      }
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
}

}  // namespace nexcv
