#include "pktm/mapreduce/worker.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <thread>

#include "pktm/errors.hpp"
#include "pktm/mapreduce/protocol.hpp"
#include "pktm/mapreduce/spill.hpp"

namespace pktm::mr {

std::string reduce_from_spill(const std::string& spill_dir, std::uint32_t partition,
                              std::uint32_t n_map_tasks) {
  std::vector<std::vector<SpillRecord>> runs(n_map_tasks);
  for (std::uint32_t t = 0; t < n_map_tasks; ++t) {
    runs[t] = read_partition_file(map_output_path(spill_dir, t, partition));
    for (const auto& r : runs[t])
      if (r.map_task_id != t)
        throw CorruptionError("map file for task " + std::to_string(t) +
                                  " holds a record of task " + std::to_string(r.map_task_id),
                              0);
  }
  const auto reduced = reduce_partition(runs);
  std::vector<SpillRecord> out;
  out.reserve(reduced.size());
  std::uint32_t index = 0;
  for (const auto& kv : reduced) out.push_back({kv.key, kv.value, partition, index++});
  const std::string path = reduce_output_path(spill_dir, partition);
  write_partition_file(path, out);
  return path;
}

namespace {

class Connection {
 public:
  explicit Connection(int fd) : fd_(fd) {}
  ~Connection() { ::close(fd_); }
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  bool send(const proto::Message& m) {
    std::lock_guard lock(mu_);
    return proto::send_frame(fd_, m);
  }
  int fd() const { return fd_; }

 private:
  int fd_;
  std::mutex mu_;
};

}  // namespace

std::size_t run_worker(const std::string& endpoint, const MapResolver& resolver,
                       const WorkerOptions& options) {
  Connection conn(proto::connect_tcp(endpoint));
  const auto pid = static_cast<std::uint32_t>(::getpid());
  if (!conn.send(proto::Register{pid})) throw IoError("coordinator closed the connection");

  std::mutex hb_mu;
  std::condition_variable hb_cv;
  bool stop = false;
  std::thread heartbeat([&] {
    const auto period = std::chrono::duration<double>(options.heartbeat_interval);
    std::unique_lock lock(hb_mu);
    while (!hb_cv.wait_for(lock, period, [&] { return stop; }))
      if (!conn.send(proto::Heartbeat{pid})) return;
  });

  std::map<std::string, MapInput> jobs;
  std::size_t served = 0;
  try {
    while (auto msg = proto::recv_frame(conn.fd())) {
      if (std::holds_alternative<proto::Shutdown>(*msg)) break;
      if (const auto* task = std::get_if<proto::TaskAssign>(&*msg)) {
        proto::TaskDone done{task->task_id, task->attempt, true, {}};
        try {
          auto it = jobs.find(task->manifest);
          if (it == jobs.end()) it = jobs.emplace(task->manifest, resolver(task->manifest)).first;
          const MapInput& input = it->second;
          if (task->record_end > input.n_records || task->record_begin > task->record_end)
            throw ConfigError("task record range exceeds the job's input");
          const MapTask mt{task->task_id, task->record_begin, task->record_end};
          const auto parts = run_map_task(input.map, mt, task->n_partitions, task->combine);
          for (std::uint32_t p = 0; p < task->n_partitions; ++p)
            write_partition_file(map_output_path(task->spill_dir, task->task_id, p), parts[p]);
        } catch (const std::exception& e) {
          done.ok = false;
          done.error = std::string(e.what()).substr(0, 4096);
        }
        ++served;
        if (!conn.send(done)) break;
      } else if (const auto* red = std::get_if<proto::ReduceAssign>(&*msg)) {
        proto::ReduceDone done{red->partition_id, red->attempt, true, {}};
        try {
          done.path_or_error = reduce_from_spill(red->spill_dir, red->partition_id, red->n_map_tasks);
        } catch (const std::exception& e) {
          done.ok = false;
          done.path_or_error = std::string(e.what()).substr(0, 4096);
        }
        ++served;
        if (!conn.send(done)) break;
      }
    }
  } catch (...) {
    {
      std::lock_guard lock(hb_mu);
      stop = true;
    }
    hb_cv.notify_all();
    heartbeat.join();
    throw;
  }
  {
    std::lock_guard lock(hb_mu);
    stop = true;
  }
  hb_cv.notify_all();
  heartbeat.join();
  return served;
}

}  // namespace pktm::mr
