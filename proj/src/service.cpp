#include "pcsketch/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "pcsketch/evaluation.hpp"
#include "pcsketch/io.hpp"
#include "pcsketch/script_json.hpp"

namespace pcsketch::service {

using nlohmann::json;

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  char buf[sizeof(T)];
  std::memcpy(buf, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

void chunk_points(std::span<const Point> points, std::vector<std::string>& chunks) {
  for (std::size_t i = 0; i < points.size(); i += kMaxChunkPoints) {
    chunks.push_back(encode_points(points.subspan(i, std::min(kMaxChunkPoints, points.size() - i))));
  }
}

struct UnknownVerb : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json error_message(const json& id, std::string_view code, const std::string& message) {
  return {{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json summary_json(const DistanceSummary& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

void write_all(int fd, const char* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoError, std::string("send failed: ") + std::strerror(errno));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

/// Reads exactly n bytes; returns false on EOF before the first byte.
bool read_all(int fd, char* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoError, std::string("recv failed: ") + std::strerror(errno));
    }
    if (r == 0) {
      if (got == 0) return false;
      throw Error(ErrorCode::IoError, "connection closed mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

std::string encode_points(std::span<const Point> points) {
  std::string out;
  out.reserve(points.size() * kPointRecordSize);
  for (const Point& p : points) {
    put_le<std::uint64_t>(out, p.id);
    for (int i = 0; i < 3; ++i) put_le<float>(out, static_cast<float>(p.position[i]));
    out.push_back(static_cast<char>(p.color.r));
    out.push_back(static_cast<char>(p.color.g));
    out.push_back(static_cast<char>(p.color.b));
  }
  return out;
}

std::vector<Point> decode_points(std::string_view payload) {
  if (payload.size() % kPointRecordSize != 0) {
    throw Error(ErrorCode::ParseError, "point frame is not a whole number of records");
  }
  std::vector<Point> out(payload.size() / kPointRecordSize);
  const char* p = payload.data();
  for (Point& pt : out) {
    pt.id = get_le<std::uint64_t>(p);
    for (int i = 0; i < 3; ++i) pt.position[i] = get_le<float>(p + 8 + 4 * i);
    pt.color = {static_cast<std::uint8_t>(p[20]), static_cast<std::uint8_t>(p[21]),
                static_cast<std::uint8_t>(p[22])};
    p += kPointRecordSize;
  }
  return out;
}

Reply SessionHandler::handle_text(std::string_view text) {
  json request;
  try {
    request = json::parse(text);
  } catch (const json::parse_error& e) {
    return {error_message(nullptr, "BAD_REQUEST", std::string("malformed JSON: ") + e.what()), {}};
  }
  return handle(request);
}

Reply SessionHandler::handle(const json& request) {
  std::lock_guard lock(mutex_);
  if (!request.is_object()) return {error_message(nullptr, "BAD_REQUEST", "request must be an object"), {}};
  const json id = request.contains("id") ? request["id"] : json(nullptr);
  if (!id.is_number_integer()) {
    return {error_message(id, "BAD_REQUEST", "request id must be an integer"), {}};
  }
  const auto id_value = id.get<std::int64_t>();
  if (last_id_ && id_value <= *last_id_) {
    return {error_message(id, "BAD_REQUEST", "request ids must increase"), {}};
  }
  last_id_ = id_value;
  if (!request.contains("verb") || !request["verb"].is_string()) {
    return {error_message(id, "BAD_REQUEST", "request has no verb"), {}};
  }
  const json params = request.value("params", json::object());
  if (!params.is_object()) return {error_message(id, "BAD_REQUEST", "params must be an object"), {}};

  Reply reply;
  try {
    json result = dispatch(request["verb"].get<std::string>(), params, reply.chunks);
    reply.message = {{"id", id}, {"ok", true}, {"result", std::move(result)}};
  } catch (const UnknownVerb& e) {
    reply = {error_message(id, "UNKNOWN_VERB", e.what()), {}};
  } catch (const Error& e) {
    reply = {error_message(id, error_code_name(e.code()), e.what()), {}};
  } catch (const json::exception& e) {
    reply = {error_message(id, "INVALID_PARAMS", e.what()), {}};
  } catch (const std::exception& e) {
    reply = {error_message(id, "INTERNAL", e.what()), {}};
  }
  return reply;
}

json SessionHandler::dispatch(const std::string& verb, const json& params,
                              std::vector<std::string>& chunks) {
  auto state = [&]() {
    const auto cloud = session_.committed();
    return json{{"points", cloud->size()},
                {"history", session_.history_depth()},
                {"pending", session_.pending().has_value()}};
  };

  if (verb == "load") {
    session_.load(read_ply(params.at("path").get<std::string>()));
    return state();
  }
  if (verb == "get_cloud") {
    const auto cloud = session_.committed();
    chunk_points(cloud->points(), chunks);
    return {{"points", cloud->size()}, {"chunks", chunks.size()}};
  }
  if (verb == "tool") {
    const PendingEdit& edit = session_.preview(tool_from_json(params));
    return {{"tool", edit.tool()}, {"added", edit.added.size()}, {"removed", edit.removed.size()}};
  }
  if (verb == "preview_diff") {
    const auto& pending = session_.pending();
    if (!pending) throw Error(ErrorCode::NoPendingEdit, "no pending preview");
    chunk_points(pending->added, chunks);
    return {{"tool", pending->tool()},
            {"added", pending->added.size()},
            {"removed", pending->removed},
            {"chunks", chunks.size()}};
  }
  if (verb == "commit") {
    session_.commit();
    return state();
  }
  if (verb == "discard") {
    session_.discard();
    return state();
  }
  if (verb == "undo") {
    session_.undo();
    return state();
  }
  if (verb == "export") {
    PlyWriteOptions opts;
    const std::string format = params.value("format", std::string("binary"));
    if (format == "ascii") {
      opts.format = PlyFormat::Ascii;
    } else if (format != "binary") {
      throw Error(ErrorCode::InvalidParams, "format must be 'ascii' or 'binary'");
    }
    opts.write_ids = params.value("ids", false);
    const auto cloud = session_.committed();
    write_ply(*cloud, params.at("path").get<std::string>(), opts);
    return {{"points", cloud->size()}};
  }
  if (verb == "stats") {
    json result = state();
    const auto cloud = session_.committed();
    if (!cloud->empty()) {
      const Aabb box = fit_aabb(*cloud);
      result["bounds"] = {{"min", vec_json(box.min)}, {"max", vec_json(box.max)}};
    }
    if (params.contains("mesh")) {
      EvaluationConfig cfg;
      cfg.samples = params.value("samples", cfg.samples);
      cfg.seed = params.value("seed", cfg.seed);
      cfg.icp.max_correspondence_distance =
          params.value("max_correspondence_distance", cfg.icp.max_correspondence_distance);
      std::optional<CorrespondenceSet> corr;
      if (params.contains("correspondences")) {
        corr = read_correspondences(params["correspondences"].get<std::string>());
      }
      const TriangleMesh mesh = read_obj(params["mesh"].get<std::string>());
      const EvaluationResult ev = evaluate(*cloud, mesh, corr, cfg);
      result["distance"] = summary_json(ev.report.summary);
      result["icp_rmse"] = ev.icp.rmse;
    }
    return result;
  }
  throw UnknownVerb("unknown verb '" + verb + "'");
}

void write_frame(int fd, FrameKind kind, std::string_view payload) {
  if (payload.size() > kMaxFrameBytes) throw Error(ErrorCode::IoError, "frame too large");
  std::string header;
  put_le<std::uint32_t>(header, static_cast<std::uint32_t>(payload.size()));
  header.push_back(static_cast<char>(kind));
  write_all(fd, header.data(), header.size());
  write_all(fd, payload.data(), payload.size());
}

std::optional<Frame> read_frame(int fd) {
  char header[5];
  if (!read_all(fd, header, sizeof(header))) return std::nullopt;
  const auto length = get_le<std::uint32_t>(header);
  if (length > kMaxFrameBytes) throw Error(ErrorCode::IoError, "frame too large");
  const auto kind = static_cast<std::uint8_t>(header[4]);
  if (kind > 1) throw Error(ErrorCode::IoError, "unknown frame kind");
  Frame f;
  f.kind = static_cast<FrameKind>(kind);
  f.payload.resize(length);
  if (length > 0 && !read_all(fd, f.payload.data(), length)) {
    throw Error(ErrorCode::IoError, "connection closed mid-frame");
  }
  return f;
}

Server::Server(EditSession& session, std::uint16_t port, const std::string& host)
    : handler_(session) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::IoError, "socket() failed");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::InvalidArgument, "bad listen address " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 1) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Server::~Server() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::stop() {
  if (!stopped_.exchange(true) && listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
}

bool Server::serve_one() {
  if (stopped_) return false;
  const int client = ::accept(listen_fd_, nullptr, nullptr);
  if (client < 0) return !stopped_;
  const int yes = 1;
  ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof(yes));
  try {
    while (auto frame = read_frame(client)) {
      Reply reply;
      if (frame->kind != FrameKind::Json) {
        reply.message = error_message(nullptr, "BAD_REQUEST", "requests must be JSON frames");
      } else {
        reply = handler_.handle_text(frame->payload);
      }
      write_frame(client, FrameKind::Json, reply.message.dump());
      for (const std::string& chunk : reply.chunks) write_frame(client, FrameKind::Points, chunk);
    }
  } catch (const Error&) {
    // Broken connection: drop this client and wait for the next one.
  }
  ::close(client);
  return !stopped_;
}

void Server::run() {
  while (serve_one()) {
  }
}

Client::Client(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::IoError, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
      ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    throw Error(ErrorCode::IoError, "cannot connect to " + host + ":" + std::to_string(port));
  }
  const int yes = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof(yes));
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

Client::Response Client::read_response() {
  auto frame = read_frame(fd_);
  if (!frame || frame->kind != FrameKind::Json) throw Error(ErrorCode::IoError, "expected a JSON reply");
  Response r;
  r.message = json::parse(frame->payload);
  if (r.ok() && r.message["result"].is_object() && r.message["result"].contains("chunks")) {
    const auto n = r.message["result"]["chunks"].get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) {
      auto chunk = read_frame(fd_);
      if (!chunk || chunk->kind != FrameKind::Points) throw Error(ErrorCode::IoError, "missing point chunk");
      auto pts = decode_points(chunk->payload);
      r.points.insert(r.points.end(), pts.begin(), pts.end());
    }
  }
  return r;
}

Client::Response Client::request(const std::string& verb, const json& params) {
  const json msg = {{"id", next_id_++}, {"verb", verb}, {"params", params}};
  write_frame(fd_, FrameKind::Json, msg.dump());
  return read_response();
}

Client::Response Client::send_raw(std::string_view text) {
  write_frame(fd_, FrameKind::Json, text);
  return read_response();
}

}  // namespace pcsketch::service
