#include "cpda/external.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <optional>
#include <thread>

#include "cpda/errors.hpp"
#include "json.hpp"

extern char** environ;

namespace cpda {

namespace protocol {

using ordered_json = nlohmann::ordered_json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4");
  if (text.empty()) return {};
  for (char ch : text) {
    const bool ok = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') ||
                    (ch >= '0' && ch <= '9') || ch == '+' || ch == '/' || ch == '=';
    if (!ok) throw ProtocolError("invalid base64 character");
  }
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("invalid base64 payload");
  std::size_t pad = 0;
  if (text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string encode_request(std::uint64_t id, const ImageTensor& img) {
  ordered_json j;
  j["id"] = id;
  j["h"] = img.height();
  j["w"] = img.width();
  j["c"] = img.channels();
  j["pixels"] = base64_encode(img.data());
  return j.dump();
}

namespace {

ordered_json parse_line(std::string_view line) {
  try {
    auto j = ordered_json::parse(line);
    if (!j.is_object()) throw ProtocolError("protocol line is not a JSON object");
    return j;
  } catch (const ordered_json::exception& e) {
    throw ProtocolError(std::string("unparseable protocol line: ") + e.what());
  }
}

std::uint64_t read_id(const ordered_json& j) {
  const auto it = j.find("id");
  if (it == j.end() || !it->is_number_unsigned()) {
    throw ProtocolError("protocol line lacks an unsigned integer id");
  }
  return it->get<std::uint64_t>();
}

}  // namespace

Request decode_request(std::string_view line) {
  const auto j = parse_line(line);
  Request r;
  r.id = read_id(j);
  try {
    const int h = j.at("h").get<int>();
    const int w = j.at("w").get<int>();
    const int c = j.at("c").get<int>();
    auto pixels = base64_decode(j.at("pixels").get<std::string>());
    if (h < 1 || w < 1 || (c != 1 && c != 3)) throw ProtocolError("bad image shape");
    const auto expected = static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
                          static_cast<std::size_t>(c);
    if (pixels.size() != expected) {
      throw ProtocolError("pixel count " + std::to_string(pixels.size()) + " != h*w*c " +
                          std::to_string(expected));
    }
    r.image = ImageTensor(h, w, c, std::move(pixels));
  } catch (const ordered_json::exception& e) {
    throw ProtocolError(std::string("bad request field: ") + e.what());
  }
  return r;
}

std::string encode_response(const Response& r) {
  ordered_json j;
  j["id"] = r.id;
  j["probs"] = r.probs;
  return j.dump();
}

std::string encode_error(const ErrorReply& e) {
  ordered_json j;
  j["id"] = e.id;
  j["error"] = e.message;
  return j.dump();
}

Reply decode_reply(std::string_view line) {
  const auto j = parse_line(line);
  const std::uint64_t id = read_id(j);
  if (const auto err = j.find("error"); err != j.end()) {
    return ErrorReply{id, err->is_string() ? err->get<std::string>() : err->dump()};
  }
  const auto probs = j.find("probs");
  if (probs == j.end() || !probs->is_array()) {
    throw ProtocolError("reply " + std::to_string(id) + " has neither probs nor error");
  }
  Response r{id, {}};
  for (const auto& p : *probs) {
    if (!p.is_number()) throw ProtocolError("reply " + std::to_string(id) + " has a non-numeric prob");
    r.probs.push_back(p.get<double>());
  }
  return r;
}

}  // namespace protocol

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw BackendUnavailable(std::string("fcntl: ") + std::strerror(errno));
  }
}

class ProcessTransport final : public LineTransport {
 public:
  ProcessTransport(pid_t pid, int read_fd, int write_fd, std::string command)
      : pid_(pid), read_fd_(read_fd), write_fd_(write_fd), command_(std::move(command)) {}

  ~ProcessTransport() override {
    ::close(write_fd_);
    ::close(read_fd_);
    // Give the child a moment to exit on EOF, then force it.
    for (int i = 0; i < 200; ++i) {
      int status = 0;
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_ || r < 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

  int read_fd() const noexcept override { return read_fd_; }
  int write_fd() const noexcept override { return write_fd_; }
  std::string describe() const override { return "exec:" + command_; }

 private:
  pid_t pid_;
  int read_fd_;
  int write_fd_;
  std::string command_;
};

class SocketTransport final : public LineTransport {
 public:
  SocketTransport(int fd, std::string peer) : fd_(fd), peer_(std::move(peer)) {}
  ~SocketTransport() override { ::close(fd_); }

  int read_fd() const noexcept override { return fd_; }
  int write_fd() const noexcept override { return fd_; }
  std::string describe() const override { return "tcp:" + peer_; }

 private:
  int fd_;
  std::string peer_;
};

}  // namespace

std::unique_ptr<LineTransport> spawn_process(const std::string& command) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

  std::string sh = "/bin/sh";
  std::string dash_c = "-c";
  std::string cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw BackendUnavailable("cannot spawn '" + command + "': " + std::strerror(rc));
  }
  return std::make_unique<ProcessTransport>(pid, from_child[0], to_child[1], command);
}

std::unique_ptr<LineTransport> connect_tcp(const std::string& host, std::uint16_t port) {
  ignore_sigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw BackendUnavailable("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw BackendUnavailable("cannot connect to " + host + ":" + service + ": " +
                             std::strerror(errno));
  }
  return std::make_unique<SocketTransport>(fd, host + ":" + service);
}

ExternalClassifier::ExternalClassifier(int input_side, std::unique_ptr<LineTransport> transport,
                                       ExternalOptions options)
    : Classifier(input_side), transport_(std::move(transport)), options_(options) {
  if (!transport_) throw InvalidArgument("external classifier needs a transport");
  ignore_sigpipe();
  set_nonblocking(transport_->read_fd());
  if (transport_->write_fd() != transport_->read_fd()) set_nonblocking(transport_->write_fd());
}

ExternalClassifier::~ExternalClassifier() = default;

std::vector<ClassDistribution> ExternalClassifier::run_batch(std::span<const ImageTensor> imgs) {
  std::lock_guard lock(mu_);
  const std::string who = transport_->describe();
  if (broken_) throw BackendUnavailable(who + ": connection unusable after an earlier failure");

  const std::uint64_t first_id = next_id_;
  next_id_ += imgs.size();

  std::vector<std::optional<ClassDistribution>> results(imgs.size());
  std::size_t answered = 0;
  std::optional<BatchElementError> first_error;

  std::size_t next_to_send = 0;
  std::string out_buf;
  std::size_t out_pos = 0;

  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  const int rfd = transport_->read_fd();
  const int wfd = transport_->write_fd();

  auto fail = [&](auto error) {
    broken_ = true;
    throw error;
  };

  auto handle_line = [&](std::string_view line) {
    if (line.empty()) return;
    protocol::Reply reply;
    try {
      reply = protocol::decode_reply(line);
    } catch (const ProtocolError& e) {
      fail(ProtocolError(who + ": " + e.what()));
    }
    const std::uint64_t id = std::visit([](const auto& r) { return r.id; }, reply);
    if (id < first_id || id >= first_id + imgs.size() || results[id - first_id].has_value()) {
      fail(ProtocolError(who + ": unexpected reply id " + std::to_string(id)));
    }
    const std::size_t index = id - first_id;
    if (const auto* err = std::get_if<protocol::ErrorReply>(&reply)) {
      if (!first_error) first_error.emplace(index, "protocol error from backend: " + err->message);
      results[index] = ClassDistribution{};
    } else {
      results[index] = ClassDistribution{std::get<protocol::Response>(reply).probs};
    }
    ++answered;
  };

  while (answered < imgs.size()) {
    if (out_pos == out_buf.size() && next_to_send < imgs.size()) {
      out_buf = protocol::encode_request(first_id + next_to_send, imgs[next_to_send]);
      out_buf.push_back('\n');
      out_pos = 0;
      ++next_to_send;
    }
    const bool want_write = out_pos < out_buf.size();

    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {rfd, POLLIN, 0};
    if (want_write && wfd != rfd) {
      fds[nfds++] = {wfd, POLLOUT, 0};
    } else if (want_write) {
      fds[0].events |= POLLOUT;
    }

    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) fail(BackendUnavailable(who + ": timed out waiting for replies"));
    const auto wait =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    const int rc = ::poll(fds, nfds, static_cast<int>(std::min<long long>(wait + 1, 1 << 30)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(BackendUnavailable(who + ": poll: " + std::strerror(errno)));
    }
    if (rc == 0) continue;

    const short wrev = (wfd != rfd && nfds > 1) ? fds[1].revents : fds[0].revents;
    if (want_write && (wrev & (POLLOUT | POLLERR))) {
      const ssize_t n = (wfd == rfd)
                            ? ::send(wfd, out_buf.data() + out_pos, out_buf.size() - out_pos,
                                     MSG_NOSIGNAL)
                            : ::write(wfd, out_buf.data() + out_pos, out_buf.size() - out_pos);
      if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
        fail(BackendUnavailable(who + ": write failed: " + std::strerror(errno)));
      }
      if (n > 0) out_pos += static_cast<std::size_t>(n);
    }

    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char chunk[65536];
      const ssize_t n = ::read(rfd, chunk, sizeof chunk);
      if (n == 0) fail(BackendUnavailable(who + ": backend closed the connection"));
      if (n < 0) {
        if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
          fail(BackendUnavailable(who + ": read failed: " + std::strerror(errno)));
        }
        continue;
      }
      read_buffer_.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (std::size_t nl; (nl = read_buffer_.find('\n', start)) != std::string::npos;
           start = nl + 1) {
        std::string_view line(read_buffer_.data() + start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        handle_line(line);
      }
      read_buffer_.erase(0, start);
    }
  }

  if (first_error) throw *first_error;
  std::vector<ClassDistribution> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace cpda
