// SPDX-License-Identifier: Apache-2.0
#pragma once

// Denoiser bridge: a length-prefixed binary protocol that forwards latent
// sequences to an external denoiser over TCP.
//
// Request : "FMDN" | u16 version=1 | u8 type=1 | u8 direction | u32 timestep |
//           u32 condition | u16 count | count x (u16 h, u16 w, u16 c, h*w*c f32)
// Response: "FMDN" | u16 version=1 | u8 type=2 | u16 count |
//           count x (epsilon blob, variance blob), blob = u16 h, u16 w, u16 c, f32...
// Error   : "FMDN" | u16 version=1 | u8 type=3 | u16 length | UTF-8 message
// All integers and floats little-endian.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <atomic>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fmstereo/diffusion.hpp"
#include "fmstereo/error.hpp"
#include "fmstereo/oracle.hpp"

namespace fmstereo::bridge {

inline constexpr char kMagic[4] = {'F', 'M', 'D', 'N'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint8_t kRequest = 1;
inline constexpr std::uint8_t kResponse = 2;
inline constexpr std::uint8_t kError = 3;
/// Upper bound on floats in one message; larger declarations are rejected.
inline constexpr std::size_t kMaxFloats = std::size_t{1} << 28;

class BridgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ConnectionError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
class ProtocolError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
class TimeoutError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
/// The remote side answered with an error message.
class RemoteError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};

struct WireFrame {
  std::uint16_t h = 0, w = 0, c = 0;
  std::vector<float> data;

  std::size_t elements() const { return static_cast<std::size_t>(h) * w * c; }
  friend bool operator==(const WireFrame&, const WireFrame&) = default;
};

struct Request {
  Direction direction = Direction::kTemporal;
  std::uint32_t timestep = 0;
  std::uint32_t condition = 0;
  std::vector<WireFrame> frames;
};

struct Response {
  std::vector<WireFrame> epsilon;
  std::vector<WireFrame> variance;
};

// ---------------------------------------------------------------- encoding

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void header(std::uint8_t type) {
    bytes(kMagic, 4);
    u16(kVersion);
    u8(type);
  }
  void frame(const WireFrame& f) {
    if (f.data.size() != f.elements()) throw ProtocolError("frame payload does not match its dims");
    u16(f.h);
    u16(f.w);
    u16(f.c);
    for (float v : f.data) f32(v);
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

inline std::vector<std::uint8_t> encode_request(const Request& r) {
  if (r.frames.size() > 0xffff) throw ProtocolError("too many frames for one request");
  Writer w;
  w.header(kRequest);
  w.u8(static_cast<std::uint8_t>(r.direction));
  w.u32(r.timestep);
  w.u32(r.condition);
  w.u16(static_cast<std::uint16_t>(r.frames.size()));
  for (const auto& f : r.frames) w.frame(f);
  return std::move(w.buffer());
}

inline std::vector<std::uint8_t> encode_response(const Response& r) {
  if (r.epsilon.size() != r.variance.size()) throw ProtocolError("epsilon/variance count mismatch");
  Writer w;
  w.header(kResponse);
  w.u16(static_cast<std::uint16_t>(r.epsilon.size()));
  for (std::size_t i = 0; i < r.epsilon.size(); ++i) {
    w.frame(r.epsilon[i]);
    w.frame(r.variance[i]);
  }
  return std::move(w.buffer());
}

inline std::vector<std::uint8_t> encode_error(const std::string& message) {
  Writer w;
  w.header(kError);
  const std::size_t n = std::min<std::size_t>(message.size(), 0xffff);
  w.u16(static_cast<std::uint16_t>(n));
  w.bytes(message.data(), n);
  return std::move(w.buffer());
}

// ---------------------------------------------------------------- decoding

/// Pulls exactly n bytes or throws.
using ReadExact = std::function<void(void* dst, std::size_t n)>;

class Reader {
 public:
  explicit Reader(ReadExact read) : read_(std::move(read)) {}

  std::uint8_t u8() {
    std::uint8_t v;
    read_(&v, 1);
    return v;
  }
  std::uint16_t u16() {
    std::uint8_t b[2];
    read_(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    read_(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  /// Reads magic + version + type and returns the type byte.
  std::uint8_t header() {
    char magic[4];
    read_(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw ProtocolError("bad magic (expected \"FMDN\")");
    const std::uint16_t version = u16();
    if (version != kVersion) {
      throw ProtocolError("unsupported version " + std::to_string(version) + " (expected 1)");
    }
    return u8();
  }

  WireFrame frame(std::size_t& budget) {
    WireFrame f;
    f.h = u16();
    f.w = u16();
    f.c = u16();
    if (f.h == 0 || f.w == 0 || f.c == 0) throw ProtocolError("frame with a zero dimension");
    const std::size_t n = f.elements();
    if (n > budget) throw ProtocolError("message exceeds the size limit");
    budget -= n;
    std::vector<std::uint8_t> raw(n * 4);
    read_(raw.data(), raw.size());
    f.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                                 (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                                 (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                                 (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
      f.data[i] = std::bit_cast<float>(bits);
    }
    return f;
  }

  std::string error_message() {
    const std::uint16_t n = u16();
    std::string s(n, '\0');
    if (n) read_(s.data(), n);
    return s;
  }

 private:
  ReadExact read_;
};

inline ReadExact buffer_source(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
  return [&buf, &pos](void* dst, std::size_t n) {
    if (pos + n > buf.size()) throw ProtocolError("truncated message");
    std::memcpy(dst, buf.data() + pos, n);
    pos += n;
  };
}

/// Body of a request whose header has already been consumed.
inline Request read_request_body(Reader& r) {
  Request req;
  const std::uint8_t dir = r.u8();
  if (dir > 1) throw ProtocolError("invalid direction " + std::to_string(dir));
  req.direction = static_cast<Direction>(dir);
  req.timestep = r.u32();
  req.condition = r.u32();
  const std::uint16_t count = r.u16();
  if (count == 0) throw ProtocolError("request with zero frames");
  std::size_t budget = kMaxFloats;
  for (int i = 0; i < count; ++i) {
    req.frames.push_back(r.frame(budget));
    const WireFrame& f = req.frames.back();
    const WireFrame& first = req.frames.front();
    if (f.h != first.h || f.w != first.w || f.c != first.c) {
      throw ProtocolError("frames in one sequence must share a shape");
    }
  }
  return req;
}

inline Request decode_request(const std::vector<std::uint8_t>& buf) {
  std::size_t pos = 0;
  Reader r(buffer_source(buf, pos));
  if (r.header() != kRequest) throw ProtocolError("not a request message");
  Request req = read_request_body(r);
  if (pos != buf.size()) throw ProtocolError("trailing bytes after request");
  return req;
}

inline Response read_response(Reader& r) {
  const std::uint8_t type = r.header();
  if (type == kError) throw RemoteError("remote error: " + r.error_message());
  if (type != kResponse) throw ProtocolError("unexpected message type " + std::to_string(type));
  Response resp;
  const std::uint16_t count = r.u16();
  std::size_t budget = kMaxFloats;
  for (int i = 0; i < count; ++i) {
    resp.epsilon.push_back(r.frame(budget));
    resp.variance.push_back(r.frame(budget));
  }
  return resp;
}

inline Response decode_response(const std::vector<std::uint8_t>& buf) {
  std::size_t pos = 0;
  Reader r(buffer_source(buf, pos));
  Response resp = read_response(r);
  if (pos != buf.size()) throw ProtocolError("trailing bytes after response");
  return resp;
}

/// Checks a response against the request it answers.
inline void validate_response(const Request& req, const Response& resp) {
  if (resp.epsilon.size() != req.frames.size()) {
    throw ProtocolError("response frame count mismatch: expected " + std::to_string(req.frames.size()) +
                        ", got " + std::to_string(resp.epsilon.size()));
  }
  for (std::size_t i = 0; i < req.frames.size(); ++i) {
    const WireFrame& q = req.frames[i];
    for (const WireFrame* f : {&resp.epsilon[i], &resp.variance[i]}) {
      if (f->h != q.h || f->w != q.w || f->c != q.c) {
        throw ProtocolError("response dims mismatch at frame " + std::to_string(i) + ": expected " +
                            std::to_string(q.h) + "x" + std::to_string(q.w) + "x" + std::to_string(q.c) +
                            ", got " + std::to_string(f->h) + "x" + std::to_string(f->w) + "x" +
                            std::to_string(f->c));
      }
    }
  }
}

inline WireFrame to_wire(const LatentFrame& z) {
  if (z.height() > 0xffff || z.width() > 0xffff || z.channels() > 0xffff) {
    throw ProtocolError("latent frame too large for the wire format");
  }
  WireFrame f{static_cast<std::uint16_t>(z.height()), static_cast<std::uint16_t>(z.width()),
              static_cast<std::uint16_t>(z.channels()), {}};
  f.data.reserve(z.size());
  for (double v : z.values()) f.data.push_back(static_cast<float>(v));
  return f;
}

inline LatentFrame from_wire(const WireFrame& f) {
  LatentFrame z(f.h, f.w, f.c);
  for (std::size_t i = 0; i < f.data.size(); ++i) z.values()[i] = f.data[i];
  return z;
}

// ---------------------------------------------------------------- sockets

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
};

inline Endpoint parse_endpoint(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= address.size()) {
    throw ConfigError("bridge address must look like host:port, got \"" + address + "\"");
  }
  Endpoint e;
  e.host = address.substr(0, colon);
  try {
    std::size_t used = 0;
    e.port = std::stoi(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw ConfigError("bridge address has an invalid port: \"" + address + "\"");
  }
  if (e.port <= 0 || e.port > 65535) throw ConfigError("bridge port out of range");
  return e;
}

/// Owning socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  void send_all(const std::vector<std::uint8_t>& buf) const {
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::send(fd_, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutError("bridge send timed out");
        throw ConnectionError(std::string("bridge send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void recv_exact(void* dst, std::size_t len) const {
    auto* p = static_cast<std::uint8_t*>(dst);
    std::size_t off = 0;
    while (off < len) {
      const ssize_t n = ::recv(fd_, p + off, len - off, 0);
      if (n == 0) throw ConnectionError("bridge connection closed by peer");
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutError("bridge receive timed out");
        throw ConnectionError(std::string("bridge receive failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  ReadExact source() const {
    return [this](void* dst, std::size_t n) { recv_exact(dst, n); };
  }

 private:
  int fd_ = -1;
};

inline Socket connect_to(const Endpoint& ep, int timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw ConnectionError("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  }
  std::string last = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    ::setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(s.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return s;
    }
    last = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw ConnectionError("cannot connect to " + ep.host + ":" + port + ": " + last);
}

// ---------------------------------------------------------------- client

/// DenoiserOracle that forwards each sequence to a remote endpoint. One
/// connection, requests serialized; reconnects after a failure.
class BridgeOracle final : public DenoiserOracle {
 public:
  explicit BridgeOracle(const std::string& address, int timeout_ms = 30000)
      : endpoint_(parse_endpoint(address)), timeout_ms_(timeout_ms) {}

  Response call(const Request& req) {
    std::lock_guard lock(mutex_);
    try {
      if (!socket_.valid()) socket_ = connect_to(endpoint_, timeout_ms_);
      socket_.send_all(encode_request(req));
      Reader reader(socket_.source());
      Response resp = read_response(reader);
      validate_response(req, resp);
      return resp;
    } catch (...) {
      socket_.reset();
      throw;
    }
  }

  std::vector<DenoiserOutput> denoise(const DenoiseRequest& dr) override {
    Request req;
    req.direction = dr.direction;
    req.timestep = static_cast<std::uint32_t>(dr.t);
    req.condition = dr.condition;
    for (const auto& z : dr.frames) req.frames.push_back(to_wire(z));
    const Response resp = call(req);
    std::vector<DenoiserOutput> out;
    out.reserve(resp.epsilon.size());
    for (std::size_t i = 0; i < resp.epsilon.size(); ++i) {
      out.push_back({from_wire(resp.epsilon[i]), from_wire(resp.variance[i])});
    }
    return out;
  }

 private:
  Endpoint endpoint_;
  int timeout_ms_;
  std::mutex mutex_;
  Socket socket_;
};

// ---------------------------------------------------------------- server

/// Reference endpoint. kZero answers eps = 0, variance = 0; kEcho answers
/// eps = input, variance = 0. The remaining modes misbehave on purpose.
enum class EchoMode { kZero, kEcho, kWrongCount, kBadMagic, kWrongDims, kStall };

class EchoServer {
 public:
  explicit EchoServer(EchoMode mode = EchoMode::kZero, int port = 0, std::string host = "127.0.0.1")
      : mode_(mode) {
    listener_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listener_.valid()) throw ConnectionError("echo server: socket() failed");
    int one = 1;
    ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      throw ConfigError("echo server: invalid IPv4 host " + host);
    }
    if (::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listener_.fd(), 8) != 0) {
      throw ConnectionError(std::string("echo server: bind/listen failed: ") + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    host_ = std::move(host);
    thread_ = std::thread([this] { serve(); });
  }

  EchoServer(const EchoServer&) = delete;
  EchoServer& operator=(const EchoServer&) = delete;
  ~EchoServer() { stop(); }

  int port() const noexcept { return port_; }
  std::string address() const { return host_ + ":" + std::to_string(port_); }
  std::size_t requests_served() const noexcept { return served_.load(); }

  void stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(listener_.fd(), SHUT_RDWR);
    {
      std::lock_guard lock(client_mutex_);
      if (client_fd_ >= 0) ::shutdown(client_fd_, SHUT_RDWR);
    }
    if (thread_.joinable()) thread_.join();
  }

  /// Blocks until the server thread exits (for the CLI).
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

 private:
  void serve() {
    while (!stopping_) {
      Socket client(::accept(listener_.fd(), nullptr, nullptr));
      if (!client.valid()) {
        if (stopping_ || errno == EINVAL || errno == EBADF) return;
        continue;
      }
      {
        std::lock_guard lock(client_mutex_);
        client_fd_ = client.fd();
      }
      handle(client);
      {
        std::lock_guard lock(client_mutex_);
        client_fd_ = -1;
      }
    }
  }

  void handle(const Socket& client) {
    Reader reader(client.source());
    for (;;) {
      Request req;
      try {
        const std::uint8_t type = reader.header();
        if (type != kRequest) throw ProtocolError("unexpected message type " + std::to_string(type));
        req = read_request_body(reader);
      } catch (const ProtocolError& e) {
        try {
          client.send_all(encode_error(e.what()));
        } catch (const BridgeError&) {
        }
        return;
      } catch (const BridgeError&) {
        return;
      }
      ++served_;
      try {
        respond(client, req);
      } catch (const BridgeError&) {
        return;
      }
    }
  }

  void respond(const Socket& client, const Request& req) {
    if (mode_ == EchoMode::kStall) {
      while (!stopping_) std::this_thread::sleep_for(std::chrono::milliseconds(5));
      return;
    }
    Response resp;
    for (const auto& f : req.frames) {
      WireFrame zero{f.h, f.w, f.c, std::vector<float>(f.elements(), 0.0f)};
      resp.epsilon.push_back(mode_ == EchoMode::kEcho ? f : zero);
      resp.variance.push_back(zero);
    }
    if (mode_ == EchoMode::kWrongCount) {
      resp.epsilon.pop_back();
      resp.variance.pop_back();
      if (resp.epsilon.empty()) {
        const auto& f = req.frames.front();
        WireFrame zero{f.h, f.w, f.c, std::vector<float>(f.elements(), 0.0f)};
        for (int i = 0; i < 2; ++i) {
          resp.epsilon.push_back(zero);
          resp.variance.push_back(zero);
        }
      }
    }
    if (mode_ == EchoMode::kWrongDims) {
      for (auto* list : {&resp.epsilon, &resp.variance})
        for (auto& f : *list) {
          f.w = static_cast<std::uint16_t>(f.w + 1);
          f.data.assign(f.elements(), 0.0f);
        }
    }
    auto bytes = encode_response(resp);
    if (mode_ == EchoMode::kBadMagic) bytes[0] = 'X';
    client.send_all(bytes);
  }

  EchoMode mode_;
  Socket listener_;
  int port_ = 0;
  std::string host_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> served_{0};
  std::mutex client_mutex_;
  int client_fd_ = -1;
};

// ---------------------------------------------------------------- self-test

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Protocol conformance checks against a live endpoint: framing round trip,
/// malformed-header rejection and wrong-shape rejection. Also re-checks the
/// local encoder/decoder on the same payload.
inline std::vector<CheckResult> self_test(const std::string& address, int timeout_ms = 5000) {
  std::vector<CheckResult> results;
  const Endpoint ep = parse_endpoint(address);

  Request req;
  req.direction = Direction::kSpatial;
  req.timestep = 981;
  req.condition = 7;
  for (int k = 0; k < 3; ++k) {
    WireFrame f{5, 7, 4, {}};
    for (std::size_t i = 0; i < f.elements(); ++i) {
      f.data.push_back(static_cast<float>(std::ldexp(static_cast<double>((i * 2654435761u + k) % 1000003) - 5e5, -7)));
    }
    f.data[0] = -0.0f;
    f.data[1] = std::numeric_limits<float>::denorm_min();
    f.data[2] = std::numeric_limits<float>::max();
    req.frames.push_back(std::move(f));
  }

  {
    CheckResult r{"local-roundtrip", false, ""};
    try {
      const Request back = decode_request(encode_request(req));
      bool same = back.frames.size() == req.frames.size();
      for (std::size_t i = 0; same && i < req.frames.size(); ++i) {
        same = std::memcmp(back.frames[i].data.data(), req.frames[i].data.data(),
                           req.frames[i].data.size() * sizeof(float)) == 0;
      }
      r.passed = same && back.timestep == req.timestep && back.condition == req.condition &&
                 back.direction == req.direction;
      r.detail = r.passed ? "bit-identical" : "decoded request differs";
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(r);
  }

  {
    CheckResult r{"remote-roundtrip", false, ""};
    try {
      Socket s = connect_to(ep, timeout_ms);
      s.send_all(encode_request(req));
      Reader reader(s.source());
      const Response resp = read_response(reader);
      validate_response(req, resp);
      bool finite = true;
      for (const auto& f : resp.variance)
        for (float v : f.data) finite = finite && std::isfinite(v) && v >= 0.0f;
      r.passed = finite;
      r.detail = finite ? "well-formed response, dims match" : "variance not finite and >= 0";
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(r);
  }

  auto expect_rejection = [&](const char* name, std::vector<std::uint8_t> bytes) {
    CheckResult r{name, false, ""};
    try {
      Socket s = connect_to(ep, timeout_ms);
      s.send_all(bytes);
      Reader reader(s.source());
      try {
        (void)read_response(reader);
        r.detail = "endpoint accepted an invalid request";
      } catch (const RemoteError& e) {
        r.passed = true;
        r.detail = e.what();
      } catch (const ConnectionError&) {
        r.passed = true;
        r.detail = "connection closed";
      }
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(r);
  };

  auto bad_magic = encode_request(req);
  bad_magic[0] = 'X';
  expect_rejection("malformed-header", bad_magic);

  Request ragged = req;
  ragged.frames[1].w = 6;
  ragged.frames[1].data.resize(ragged.frames[1].elements());
  expect_rejection("wrong-shape", encode_request(ragged));

  {
    CheckResult r{"local-response-validation", false, ""};
    try {
      Response resp;
      for (const auto& f : req.frames) {
        resp.epsilon.push_back(f);
        resp.variance.push_back(f);
      }
      resp.epsilon.pop_back();
      resp.variance.pop_back();
      validate_response(req, decode_response(encode_response(resp)));
      r.detail = "short response accepted";
    } catch (const ProtocolError& e) {
      r.passed = true;
      r.detail = e.what();
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(r);
  }
  return results;
}

}  // namespace fmstereo::bridge
