#include <fcntl.h>
#include <fmt/format.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>

#include "tutorbench/hashing.hpp"
#include "tutorbench/http.hpp"
#include "tutorbench/quality.hpp"

namespace tutorbench {

MockScorer::MockScorer(double praise_rate, double error_rate, std::optional<int> constant)
    : praise_rate_(praise_rate), error_rate_(error_rate), constant_(constant) {}

nlohmann::json MockScorer::score(const nlohmann::json& request) {
  if (constant_) return {{"praise", *constant_}, {"error_response", *constant_}};
  const auto text = request.at("response_text").get<std::string>();
  auto draw = [&](std::string_view salt) {
    return static_cast<double>(splitmix64(fnv1a64(std::string(salt) + text)) % 10000) / 10000.0;
  };
  return {{"praise", draw("praise|") < praise_rate_ ? 1 : 0},
          {"error_response", draw("error|") < error_rate_ ? 1 : 0}};
}

SubprocessScorer::SubprocessScorer(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  // A scorer that exits without draining stdin must not kill us.
  std::signal(SIGPIPE, SIG_IGN);
}

nlohmann::json SubprocessScorer::score(const nlohmann::json& request) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(fmt::format("pipe: {}", std::strerror(errno)));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(fmt::format("pipe: {}", std::strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error(fmt::format("fork: {}", std::strerror(errno)));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);

  const std::string payload = request.dump() + "\n";
  std::size_t written = 0;
  std::string reply;
  int to_child = in_pipe[1];
  const int from_child = out_pipe[0];
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  bool timed_out = false;
  bool eof = false;
  while (!eof) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {from_child, POLLIN, 0};
    if (to_child >= 0) fds[nfds++] = {to_child, POLLOUT, 0};
    if (poll(fds, nfds, static_cast<int>(left.count())) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const auto n = write(to_child, payload.data() + written, payload.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN) written = payload.size();
      if (written == payload.size()) {
        close(to_child);
        to_child = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[4096];
      const auto n = read(from_child, buf, sizeof buf);
      if (n > 0) {
        reply.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EAGAIN) {
        eof = true;
      }
    }
  }
  if (to_child >= 0) close(to_child);
  close(from_child);
  if (timed_out) kill(pid, SIGKILL);
  int status = 0;
  waitpid(pid, &status, 0);
  if (timed_out) {
    throw Error(fmt::format("scorer '{}' timed out after {} ms", command_, timeout_.count()));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(fmt::format("scorer '{}' exited with status {}", command_,
                            WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  try {
    return nlohmann::json::parse(reply);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(fmt::format("scorer '{}' replied with invalid JSON", command_));
  }
}

HttpScorer::HttpScorer(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

nlohmann::json HttpScorer::score(const nlohmann::json& request) {
  const auto res = post_json(url_, request.dump(), {}, timeout_);
  if (res.status < 200 || res.status >= 300) {
    throw Error(fmt::format("scorer {}: HTTP {}", url_, res.status));
  }
  try {
    return nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(fmt::format("scorer {} replied with invalid JSON", url_));
  }
}

bool ApplicabilityRule::praise_applies(const TutoringScenario& s) const {
  return !praise_requires_correct_steps || !s.correct_steps.empty();
}

bool ApplicabilityRule::error_applies(const TutoringScenario& s) const {
  return !error_requires_incorrect_steps || !s.incorrect_steps.empty();
}

namespace {

std::optional<int> read_rating(const nlohmann::json& reply, const char* key) {
  if (!reply.contains(key) || reply.at(key).is_null()) return std::nullopt;
  const auto& v = reply.at(key);
  if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
    throw Error(fmt::format("rating '{}' must be 0, 1 or null, got {}", key, v.dump()));
  }
  return v.get<int>();
}

}  // namespace

SoundnessScore score_soundness(const GenerationRecord& record, const TutoringScenario& scenario,
                               SoundnessScorer& scorer, const ApplicabilityRule& rule) {
  SoundnessScore out;
  out.scorer_id = scorer.id();
  const bool want_praise = rule.praise_applies(scenario);
  const bool want_error = rule.error_applies(scenario);
  if (!want_praise && !want_error) return out;
  try {
    const auto reply =
        scorer.score({{"response_text", record.response_text}, {"scenario", scenario}});
    if (!reply.is_object()) throw Error("scorer reply is not an object");
    const auto praise = read_rating(reply, "praise");
    const auto error = read_rating(reply, "error_response");
    if (want_praise) out.praise_rating = praise;
    if (want_error) out.error_response_rating = error;
  } catch (const std::exception& e) {
    out.praise_rating.reset();
    out.error_response_rating.reset();
    out.error = e.what();
  }
  return out;
}

}  // namespace tutorbench
