#include "pktm/mapreduce/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "../byteio.hpp"
#include "pktm/errors.hpp"

namespace pktm::mr::proto {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) throw ConfigError("endpoint '" + endpoint + "' is not host:port");
  const std::string host = endpoint.substr(0, colon);
  const std::string port_text = endpoint.substr(colon + 1);
  char* end = nullptr;
  errno = 0;
  const long port = std::strtol(port_text.c_str(), &end, 10);
  if (port_text.empty() || *end != '\0' || errno != 0 || port < 0 || port > 65535)
    throw ConfigError("endpoint '" + endpoint + "' has an invalid port");
  return {host.empty() ? "127.0.0.1" : host, static_cast<std::uint16_t>(port)};
}

sockaddr_in make_addr(const std::string& endpoint) {
  auto [host, port] = split_endpoint(endpoint);
  if (host == "localhost") host = "127.0.0.1";
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw ConfigError("endpoint '" + endpoint + "' needs a numeric IPv4 host");
  return addr;
}

}  // namespace

std::string encode_frame(const Message& msg) {
  detail::ByteWriter w;
  std::visit(Overloaded{
                 [&](const Register& m) {
                   w.u8(static_cast<std::uint8_t>(Tag::kRegister));
                   w.u32(m.pid);
                 },
                 [&](const TaskAssign& m) {
                   w.u8(static_cast<std::uint8_t>(Tag::kTaskAssign));
                   w.u32(m.task_id);
                   w.u32(m.attempt);
                   w.u32(m.record_begin);
                   w.u32(m.record_end);
                   w.u32(m.n_partitions);
                   w.u8(m.combine ? 1 : 0);
                   w.str(m.manifest);
                   w.str(m.spill_dir);
                 },
                 [&](const TaskDone& m) {
                   w.u8(static_cast<std::uint8_t>(Tag::kTaskDone));
                   w.u32(m.task_id);
                   w.u32(m.attempt);
                   w.u8(m.ok ? 1 : 0);
                   w.str(m.error);
                 },
                 [&](const ReduceAssign& m) {
                   w.u8(static_cast<std::uint8_t>(Tag::kReduceAssign));
                   w.u32(m.partition_id);
                   w.u32(m.attempt);
                   w.u32(m.n_map_tasks);
                   w.str(m.spill_dir);
                 },
                 [&](const ReduceDone& m) {
                   w.u8(static_cast<std::uint8_t>(Tag::kReduceDone));
                   w.u32(m.partition_id);
                   w.u32(m.attempt);
                   w.u8(m.ok ? 1 : 0);
                   w.str(m.path_or_error);
                 },
                 [&](const Shutdown&) { w.u8(static_cast<std::uint8_t>(Tag::kShutdown)); },
                 [&](const Heartbeat& m) {
                   w.u8(static_cast<std::uint8_t>(Tag::kHeartbeat));
                   w.u32(m.pid);
                 },
             },
             msg);
  detail::ByteWriter frame;
  frame.u32(static_cast<std::uint32_t>(w.data().size()));
  frame.bytes(w.data());
  return frame.take();
}

Message decode_payload(std::string_view payload) {
  detail::ByteReader r(payload);
  const auto tag = r.u8();
  Message out;
  switch (static_cast<Tag>(tag)) {
    case Tag::kRegister:
      out = Register{r.u32()};
      break;
    case Tag::kTaskAssign: {
      TaskAssign m;
      m.task_id = r.u32();
      m.attempt = r.u32();
      m.record_begin = r.u32();
      m.record_end = r.u32();
      m.n_partitions = r.u32();
      m.combine = r.u8() != 0;
      m.manifest = r.str();
      m.spill_dir = r.str();
      out = std::move(m);
      break;
    }
    case Tag::kTaskDone: {
      TaskDone m;
      m.task_id = r.u32();
      m.attempt = r.u32();
      m.ok = r.u8() != 0;
      m.error = r.str();
      out = std::move(m);
      break;
    }
    case Tag::kReduceAssign: {
      ReduceAssign m;
      m.partition_id = r.u32();
      m.attempt = r.u32();
      m.n_map_tasks = r.u32();
      m.spill_dir = r.str();
      out = std::move(m);
      break;
    }
    case Tag::kReduceDone: {
      ReduceDone m;
      m.partition_id = r.u32();
      m.attempt = r.u32();
      m.ok = r.u8() != 0;
      m.path_or_error = r.str();
      out = std::move(m);
      break;
    }
    case Tag::kShutdown:
      out = Shutdown{};
      break;
    case Tag::kHeartbeat:
      out = Heartbeat{r.u32()};
      break;
    default:
      throw FormatError("unknown message tag " + std::to_string(tag), 0);
  }
  if (r.remaining() != 0)
    throw CorruptionError("trailing bytes after message", r.offset());
  return out;
}

std::optional<std::string> FrameBuffer::next() {
  if (buf_.size() < 4) return std::nullopt;
  detail::ByteReader r(buf_);
  const auto len = r.u32();
  if (len > kMaxFrameBytes) throw FormatError("frame of " + std::to_string(len) + " bytes", 0);
  if (buf_.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  std::string payload = buf_.substr(4, len);
  buf_.erase(0, 4 + static_cast<std::size_t>(len));
  return payload;
}

bool send_frame(int fd, const Message& msg) {
  const std::string frame = encode_frame(msg);
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

namespace {

// false on EOF before any byte was read
bool read_exact(int fd, char* dst, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t k = ::recv(fd, dst + got, n - got, 0);
    if (k == 0) {
      if (got == 0) return false;
      throw TruncationError("connection closed mid-frame", got);
    }
    if (k < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("recv failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(k);
  }
  return true;
}

}  // namespace

std::optional<Message> recv_frame(int fd) {
  char len_bytes[4];
  if (!read_exact(fd, len_bytes, 4)) return std::nullopt;
  std::uint32_t len;
  std::memcpy(&len, len_bytes, 4);
  if (len > kMaxFrameBytes) throw FormatError("frame of " + std::to_string(len) + " bytes", 0);
  std::string payload(len, '\0');
  if (len > 0 && !read_exact(fd, payload.data(), len))
    throw TruncationError("connection closed mid-frame", 4);
  return decode_payload(payload);
}

Listener listen_tcp(const std::string& endpoint) {
  sockaddr_in addr = make_addr(endpoint);
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 64) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw IoError("cannot listen on " + endpoint + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  char host[INET_ADDRSTRLEN];
  ::inet_ntop(AF_INET, &addr.sin_addr, host, sizeof host);
  return {fd, std::string(host) + ":" + std::to_string(ntohs(addr.sin_port))};
}

int connect_tcp(const std::string& endpoint) {
  sockaddr_in addr = make_addr(endpoint);
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw IoError("cannot connect to " + endpoint + ": " + err);
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

}  // namespace pktm::mr::proto
