#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pcsketch/toolbox.hpp"

// Wire protocol (see docs/protocol.md):
//   frame   = u32 little-endian payload length, u8 kind, payload
//   kind 0  = UTF-8 JSON message (request or response)
//   kind 1  = packed points, 23 bytes each: u64 id, 3 x f32 position, 3 x u8 rgb
// A response whose result carries "chunks": n is followed by n point frames.

namespace pcsketch::service {

inline constexpr std::size_t kMaxChunkPoints = 65536;
inline constexpr std::size_t kPointRecordSize = 23;
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

enum class FrameKind : std::uint8_t { Json = 0, Points = 1 };

struct Frame {
  FrameKind kind = FrameKind::Json;
  std::string payload;
};

std::string encode_points(std::span<const Point> points);
/// Throws ParseError when the payload is not a whole number of records.
std::vector<Point> decode_points(std::string_view payload);

/// A response message plus the point frames that follow it.
struct Reply {
  nlohmann::json message;
  std::vector<std::string> chunks;
};

/**
 * @brief Request dispatcher for one EditSession.
 *
 * Requests are processed one at a time under a lock. Request ids must
 * increase; a malformed request gets an error response and leaves the session
 * untouched.
 */
class SessionHandler {
 public:
  explicit SessionHandler(EditSession& session) : session_(session) {}

  Reply handle(const nlohmann::json& request);
  Reply handle_text(std::string_view text);

 private:
  nlohmann::json dispatch(const std::string& verb, const nlohmann::json& params,
                          std::vector<std::string>& chunks);

  EditSession& session_;
  std::optional<std::int64_t> last_id_;
  std::mutex mutex_;
};

/// Blocking frame I/O on a connected socket. read_frame returns nullopt on a
/// clean close before a header; throws IoError on a short or oversized frame.
void write_frame(int fd, FrameKind kind, std::string_view payload);
std::optional<Frame> read_frame(int fd);

/// Single-client TCP server: clients are accepted one after another and each
/// is served until it disconnects.
class Server {
 public:
  /// Binds and listens immediately; port 0 picks a free port.
  Server(EditSession& session, std::uint16_t port, const std::string& host = "127.0.0.1");
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  /// Serves one client to completion. Returns false once stopped.
  bool serve_one();
  /// Serves clients until stop().
  void run();
  void stop();

 private:
  SessionHandler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopped_{false};
};

/// Minimal blocking client, used by tests and the Python bindings.
class Client {
 public:
  Client(const std::string& host, std::uint16_t port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  struct Response {
    nlohmann::json message;
    std::vector<Point> points;  ///< concatenated point chunks, if any

    bool ok() const { return message.value("ok", false); }
    const nlohmann::json& result() const { return message.at("result"); }
    std::string error_code() const {
      return message.contains("error") ? message["error"].value("code", "") : "";
    }
  };

  Response request(const std::string& verb, const nlohmann::json& params = nlohmann::json::object());
  /// Sends raw text as one JSON frame and reads the reply.
  Response send_raw(std::string_view text);

 private:
  Response read_response();

  int fd_ = -1;
  std::int64_t next_id_ = 1;
};

}  // namespace pcsketch::service
