#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cpda/classifier.hpp"

namespace cpda {

// Newline-delimited JSON wire protocol spoken with external backends.
//   request:  {"id": <uint64>, "h": <int>, "w": <int>, "c": <int>, "pixels": "<base64>"}
//   response: {"id": <uint64>, "probs": [<float>, ...]}
//   error:    {"id": <uint64>, "error": "<message>"}
namespace protocol {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on invalid input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// One request line, without the trailing newline.
std::string encode_request(std::uint64_t id, const ImageTensor& img);

struct Request {
  std::uint64_t id = 0;
  ImageTensor image;
};
/// Throws ProtocolError on malformed lines or a pixel count that disagrees with h*w*c.
Request decode_request(std::string_view line);

struct Response {
  std::uint64_t id = 0;
  std::vector<double> probs;
};
struct ErrorReply {
  std::uint64_t id = 0;
  std::string message;
};
using Reply = std::variant<Response, ErrorReply>;

std::string encode_response(const Response& r);
std::string encode_error(const ErrorReply& e);
/// Throws ProtocolError when the line is neither a response nor an error object.
Reply decode_reply(std::string_view line);

}  // namespace protocol

/// Bidirectional line stream to a backend: the stdio of a spawned process or a TCP socket.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual int read_fd() const noexcept = 0;
  virtual int write_fd() const noexcept = 0;
  virtual std::string describe() const = 0;
};

/// Spawns `command` through /bin/sh -c with its stdin/stdout connected to pipes. The child
/// inherits stderr. Closing the transport closes stdin and reaps the child.
std::unique_ptr<LineTransport> spawn_process(const std::string& command);

/// Connects to host:port. Throws BackendUnavailable on failure.
std::unique_ptr<LineTransport> connect_tcp(const std::string& host, std::uint16_t port);

struct ExternalOptions {
  std::chrono::milliseconds timeout{30'000};  // per batch
};

/// Classifier backed by a remote process speaking the wire protocol. Requests in a batch
/// are pipelined on one connection; replies may arrive in any order and are matched by id.
/// Concurrent callers are serialized.
class ExternalClassifier final : public Classifier {
 public:
  ExternalClassifier(int input_side, std::unique_ptr<LineTransport> transport,
                     ExternalOptions options = {});
  ~ExternalClassifier() override;

 protected:
  std::vector<ClassDistribution> run_batch(std::span<const ImageTensor> imgs) override;

 private:
  std::mutex mu_;
  std::unique_ptr<LineTransport> transport_;
  ExternalOptions options_;
  std::uint64_t next_id_ = 1;
  std::string read_buffer_;
  bool broken_ = false;
};

}  // namespace cpda
