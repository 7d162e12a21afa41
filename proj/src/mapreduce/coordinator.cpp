// Multiprocess execution: a single-threaded coordinator drives worker
// processes over TCP. Workers write map output to spill files named by
// (map task, partition) and publish them by atomic rename, so a task that
// runs twice after a timeout or a lost worker overwrites identical bytes
// and every file is consumed exactly once by its reducer.

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <optional>

#include "pktm/errors.hpp"
#include "pktm/mapreduce/engine.hpp"
#include "pktm/mapreduce/protocol.hpp"
#include "pktm/mapreduce/spill.hpp"
#include "pktm/mapreduce/worker.hpp"

namespace pktm::mr {

namespace {

using Clock = std::chrono::steady_clock;

enum class Phase { map, reduce, done };

struct TaskState {
  bool done = false;
  bool queued = false;
  std::uint32_t attempts = 0;
};

struct Assignment {
  Phase phase;
  std::uint32_t id;
  std::uint32_t attempt;
  Clock::time_point started;
  bool timed_out = false;
};

struct WorkerConn {
  int fd = -1;
  int index = -1;  // registration order, -1 until REGISTER
  pid_t pid = 0;
  bool alive = true;
  proto::FrameBuffer inbox;
  std::optional<Assignment> busy;
  Clock::time_point last_seen;
  std::size_t done_count = 0;
  bool kill_pending = false;
};

class Coordinator {
 public:
  Coordinator(const MapInput& input, const JobConfig& config)
      : input_(input), config_(config), tasks_(plan_map_tasks(input.n_records, config.chunk_size)) {
    map_state_.resize(tasks_.size());
    reduce_state_.resize(config.n_partitions);
    for (std::uint32_t t = 0; t < tasks_.size(); ++t) enqueue(Phase::map, t);
    for (std::uint32_t p = 0; p < config.n_partitions; ++p) enqueue(Phase::reduce, p);
    phase_ = tasks_.empty() ? Phase::reduce : Phase::map;
    stats_.map_tasks = tasks_.size();
    stats_.reduce_tasks = config.n_partitions;
  }

  ~Coordinator() { teardown(); }

  JobResult run() {
    spill_dir_ = make_job_spill_dir(config_);
    try {
      listener_ = proto::listen_tcp(config_.listen);
      if (config_.on_listening) config_.on_listening(listener_.endpoint);
      if (config_.spawn_workers) spawn();
      loop();
      JobResult result;
      result.pairs = collect();
      result.stats = stats_;
      result.stats.keys_strictly_ascending = true;
      teardown();
      if (!config_.keep_spill) std::filesystem::remove_all(spill_dir_);
      return result;
    } catch (...) {
      teardown();
      if (!config_.keep_spill) {
        std::error_code ec;
        std::filesystem::remove_all(spill_dir_, ec);
      }
      throw;
    }
  }

 private:
  void spawn() {
    for (std::uint32_t i = 0; i < config_.n_workers; ++i) {
      std::fflush(nullptr);
      const pid_t pid = ::fork();
      if (pid < 0) throw JobError("fork failed");
      if (pid == 0) {
        ::close(listener_.fd);
        int code = 0;
        try {
          const MapInput& in = input_;
          run_worker(listener_.endpoint, [&in](const std::string&) { return in; });
        } catch (...) {
          code = 1;
        }
        ::_exit(code);
      }
      children_.push_back(pid);
    }
  }

  void enqueue(Phase phase, std::uint32_t id) {
    auto& st = state(phase, id);
    if (st.done || st.queued) return;
    st.queued = true;
    (phase == Phase::map ? map_queue_ : reduce_queue_).push_back(id);
  }

  TaskState& state(Phase phase, std::uint32_t id) {
    return phase == Phase::map ? map_state_[id] : reduce_state_[id];
  }

  // A failed, timed-out or orphaned attempt: schedule another one if the
  // retry budget allows.
  void retry(Phase phase, std::uint32_t id, const std::string& why) {
    auto& st = state(phase, id);
    if (st.done) return;
    if (st.attempts > config_.max_task_retries)
      throw JobError(std::string(phase == Phase::map ? "map" : "reduce") + " task " +
                     std::to_string(id) + " failed after " + std::to_string(st.attempts) +
                     " attempts: " + why);
    enqueue(phase, id);
  }

  void loop() {
    auto no_worker_since = Clock::now();
    while (phase_ != Phase::done) {
      std::vector<pollfd> fds;
      fds.push_back({listener_.fd, POLLIN, 0});
      for (const auto& w : workers_)
        if (w.alive) fds.push_back({w.fd, POLLIN, 0});
      if (::poll(fds.data(), fds.size(), 20) < 0 && errno != EINTR)
        throw JobError("poll failed");

      if (fds[0].revents & POLLIN) accept_worker();
      for (auto& w : workers_)
        if (w.alive) drain(w);

      check_timeouts();
      assign();
      inject_faults();

      std::size_t live = 0;
      for (const auto& w : workers_)
        if (w.alive && w.index >= 0) ++live;
      if (live > 0) {
        no_worker_since = Clock::now();
      } else if (phase_ != Phase::done) {
        if (config_.spawn_workers && all_children_exited())
          throw JobError("all workers lost with work remaining (" +
                         std::to_string(stats_.workers_lost) + " lost)");
        if (seconds_since(no_worker_since) > config_.task_timeout)
          throw JobError("no live workers for " + std::to_string(config_.task_timeout) + " s");
      }
    }
  }

  static double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
  }

  bool all_children_exited() {
    for (auto& pid : children_) {
      if (pid <= 0) continue;
      int status = 0;
      if (::waitpid(pid, &status, WNOHANG) == pid) pid = -pid;
    }
    for (pid_t pid : children_)
      if (pid > 0) return false;
    return true;
  }

  void accept_worker() {
    const int fd = ::accept4(listener_.fd, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) return;
    WorkerConn w;
    w.fd = fd;
    w.last_seen = Clock::now();
    workers_.push_back(std::move(w));
  }

  void drain(WorkerConn& w) {
    char buf[4096];
    bool closed = false;
    for (;;) {
      const ssize_t n = ::recv(w.fd, buf, sizeof buf, MSG_DONTWAIT);
      if (n > 0) {
        w.inbox.append({buf, static_cast<std::size_t>(n)});
        continue;
      }
      if (n < 0 && errno == EINTR) continue;
      closed = n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK);
      break;
    }
    // Frames that arrived before a close still count.
    try {
      while (auto payload = w.inbox.next()) {
        w.last_seen = Clock::now();
        handle(w, proto::decode_payload(*payload));
        if (!w.alive) return;
      }
    } catch (const JobError&) {
      throw;
    } catch (const Error& e) {
      lose(w, std::string("protocol error: ") + e.what());
      return;
    }
    if (closed) lose(w, "connection closed");
  }

  void lose(WorkerConn& w, const std::string& why) {
    if (!w.alive) return;
    w.alive = false;
    ::close(w.fd);
    ++stats_.workers_lost;
    if (w.busy && !w.busy->timed_out)
      retry(w.busy->phase, w.busy->id, "worker " + std::to_string(w.index) + " lost: " + why);
    w.busy.reset();
  }

  void handle(WorkerConn& w, const proto::Message& msg) {
    if (const auto* reg = std::get_if<proto::Register>(&msg)) {
      if (w.index < 0) {
        w.index = static_cast<int>(stats_.workers_registered++);
        w.pid = static_cast<pid_t>(reg->pid);
      }
      return;
    }
    if (std::holds_alternative<proto::Heartbeat>(msg)) return;
    if (const auto* done = std::get_if<proto::TaskDone>(&msg)) {
      finish(w, Phase::map, done->task_id, done->ok, done->error);
      return;
    }
    if (const auto* done = std::get_if<proto::ReduceDone>(&msg)) {
      finish(w, Phase::reduce, done->partition_id, done->ok, done->path_or_error);
      return;
    }
    lose(w, "unexpected message");
  }

  void finish(WorkerConn& w, Phase phase, std::uint32_t id, bool ok, const std::string& detail) {
    const bool timed_out = w.busy && w.busy->timed_out;
    w.busy.reset();
    const std::size_t n = phase == Phase::map ? map_state_.size() : reduce_state_.size();
    if (id >= n) {
      lose(w, "completion for unknown task");
      return;
    }
    auto& st = state(phase, id);
    if (ok) {
      if (!st.done) {
        st.done = true;
        ++(phase == Phase::map ? maps_done_ : reduces_done_);
      }
      if (++w.done_count == 1 && w.index == config_.fault.kill_worker_after_first_done)
        w.kill_pending = true;
    } else if (!timed_out) {
      retry(phase, id, detail);
    }
    if (maps_done_ == map_state_.size() && phase_ == Phase::map) phase_ = Phase::reduce;
    if (phase_ == Phase::reduce && reduces_done_ == reduce_state_.size()) phase_ = Phase::done;
  }

  void check_timeouts() {
    for (auto& w : workers_) {
      if (!w.alive) continue;
      // Heartbeats arrive every 0.5 s; a slow task alone is not a lost worker.
      if (seconds_since(w.last_seen) > std::max(config_.task_timeout, 2.0)) {
        lose(w, "no heartbeat");
        continue;
      }
      if (w.busy && !w.busy->timed_out && seconds_since(w.busy->started) > config_.task_timeout) {
        w.busy->timed_out = true;
        retry(w.busy->phase, w.busy->id, "timed out");
      }
    }
  }

  void assign() {
    for (auto& w : workers_) {
      if (!w.alive || w.index < 0 || w.busy) continue;
      auto& queue = phase_ == Phase::map ? map_queue_ : reduce_queue_;
      if (phase_ == Phase::done) return;
      std::optional<std::uint32_t> id;
      while (!queue.empty() && !id) {
        const auto cand = queue.front();
        queue.pop_front();
        auto& st = state(phase_, cand);
        st.queued = false;
        if (!st.done) id = cand;
      }
      if (!id) return;
      auto& st = state(phase_, *id);
      const std::uint32_t attempt = st.attempts++;
      ++stats_.task_attempts;
      if (attempt > 0) ++stats_.task_retries;
      proto::Message msg;
      if (phase_ == Phase::map) {
        const auto& t = tasks_[*id];
        msg = proto::TaskAssign{t.task_id,
                                attempt,
                                static_cast<std::uint32_t>(t.begin),
                                static_cast<std::uint32_t>(t.end),
                                config_.n_partitions,
                                config_.combiner_enabled,
                                input_.manifest,
                                spill_dir_};
      } else {
        msg = proto::ReduceAssign{*id, attempt, static_cast<std::uint32_t>(tasks_.size()),
                                  spill_dir_};
      }
      w.busy = Assignment{phase_, *id, attempt, Clock::now()};
      if (!proto::send_frame(w.fd, msg)) lose(w, "send failed");
    }
  }

  void inject_faults() {
    for (auto& w : workers_) {
      if (!w.alive || !w.kill_pending) continue;
      // Kill once the worker holds its next task, or when nothing is left.
      const bool nothing_left = map_queue_.empty() && reduce_queue_.empty();
      if (w.busy || nothing_left) {
        w.kill_pending = false;
        ::kill(w.pid, SIGKILL);
      }
    }
  }

  std::vector<KeyValue> collect() {
    std::vector<std::vector<KeyValue>> parts(config_.n_partitions);
    for (std::uint32_t p = 0; p < config_.n_partitions; ++p) {
      std::vector<SpillRecord> recs;
      try {
        recs = read_partition_file(reduce_output_path(spill_dir_, p));
      } catch (const Error& e) {
        throw JobError(std::string("cannot read reduce output: ") + e.what());
      }
      parts[p].reserve(recs.size());
      for (const auto& r : recs) {
        if (!parts[p].empty() && !(parts[p].back().key < r.key))
          throw JobError("reduce output of partition " + std::to_string(p) +
                         " not strictly ascending");
        parts[p].push_back({r.key, r.value});
      }
    }
    return merge_partitions(std::move(parts));
  }

  void teardown() {
    for (auto& w : workers_) {
      if (!w.alive) continue;
      proto::send_frame(w.fd, proto::Shutdown{});
      ::close(w.fd);
      w.alive = false;
    }
    if (listener_.fd >= 0) {
      ::close(listener_.fd);
      listener_.fd = -1;
    }
    for (pid_t& pid : children_) {
      if (pid <= 0) continue;
      if (phase_ != Phase::done) ::kill(pid, SIGKILL);
      int status = 0;
      ::waitpid(pid, &status, 0);
      pid = -pid;
    }
  }

  const MapInput& input_;
  const JobConfig& config_;
  std::vector<MapTask> tasks_;
  std::vector<TaskState> map_state_;
  std::vector<TaskState> reduce_state_;
  std::deque<std::uint32_t> map_queue_;
  std::deque<std::uint32_t> reduce_queue_;
  std::size_t maps_done_ = 0;
  std::size_t reduces_done_ = 0;
  Phase phase_ = Phase::map;
  proto::Listener listener_;
  std::vector<WorkerConn> workers_;
  std::vector<pid_t> children_;
  std::string spill_dir_;
  JobStats stats_;
};

}  // namespace

JobResult run_multiprocess(const MapInput& input, const JobConfig& config) {
  if (!config.spawn_workers && input.manifest.empty())
    throw ConfigError("external workers need a job manifest");
  if (input.n_records > 0xFFFFFFFFu) throw ConfigError("too many records for the wire protocol");
  Coordinator coordinator(input, config);
  return coordinator.run();
}

}  // namespace pktm::mr
