#pragma once

// Coordinator <-> worker control messages. Each frame is a u32 LE payload
// length followed by the payload: a u8 tag and the tag's fields. Integers
// are little-endian u32; strings (paths, diagnostics) are a u16 LE length
// followed by UTF-8 bytes. Intermediate data never travels over the wire,
// only the paths where it lives.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace pktm::mr::proto {

enum class Tag : std::uint8_t {
  kRegister = 0,
  kTaskAssign = 1,
  kTaskDone = 2,
  kReduceAssign = 3,
  kReduceDone = 4,
  kShutdown = 5,
  kHeartbeat = 6,
};

struct Register {
  std::uint32_t pid = 0;
  bool operator==(const Register&) const = default;
};

struct TaskAssign {
  std::uint32_t task_id = 0;
  std::uint32_t attempt = 0;
  std::uint32_t record_begin = 0;
  std::uint32_t record_end = 0;
  std::uint32_t n_partitions = 1;
  bool combine = false;
  std::string manifest;
  std::string spill_dir;
  bool operator==(const TaskAssign&) const = default;
};

struct TaskDone {
  std::uint32_t task_id = 0;
  std::uint32_t attempt = 0;
  bool ok = true;
  std::string error;
  bool operator==(const TaskDone&) const = default;
};

struct ReduceAssign {
  std::uint32_t partition_id = 0;
  std::uint32_t attempt = 0;
  std::uint32_t n_map_tasks = 0;
  std::string spill_dir;
  bool operator==(const ReduceAssign&) const = default;
};

struct ReduceDone {
  std::uint32_t partition_id = 0;
  std::uint32_t attempt = 0;
  bool ok = true;
  std::string path_or_error;  // output path on success, diagnostic otherwise
  bool operator==(const ReduceDone&) const = default;
};

struct Shutdown {
  bool operator==(const Shutdown&) const = default;
};

struct Heartbeat {
  std::uint32_t pid = 0;
  bool operator==(const Heartbeat&) const = default;
};

using Message =
    std::variant<Register, TaskAssign, TaskDone, ReduceAssign, ReduceDone, Shutdown, Heartbeat>;

inline constexpr std::uint32_t kMaxFrameBytes = 1u << 20;

// Length-prefixed frame ready to write to a socket.
std::string encode_frame(const Message& msg);

// Decodes one payload (without the length prefix). Throws FormatError on an
// unknown tag, TruncationError on short payloads, CorruptionError on
// trailing bytes.
Message decode_payload(std::string_view payload);

// Incremental frame splitter for non-blocking reads.
class FrameBuffer {
 public:
  void append(std::string_view bytes) { buf_.append(bytes); }
  // Next complete payload, if any. Throws FormatError for oversized frames.
  std::optional<std::string> next();

 private:
  std::string buf_;
};

// Blocking helpers over a connected stream socket. send_frame returns false
// if the peer is gone; recv_frame returns nullopt on orderly EOF.
bool send_frame(int fd, const Message& msg);
std::optional<Message> recv_frame(int fd);

// "host:port" helpers. listen_tcp binds and returns the fd plus the actual
// bound endpoint (so port 0 resolves to the ephemeral port).
struct Listener {
  int fd = -1;
  std::string endpoint;
};
Listener listen_tcp(const std::string& endpoint);
int connect_tcp(const std::string& endpoint);

}  // namespace pktm::mr::proto
