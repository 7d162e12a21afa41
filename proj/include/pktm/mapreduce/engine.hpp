#pragma once

// Deterministic map -> combine -> partition -> group/sort -> sum-reduce
// runtime over u64 keys and f64 values.
//
// Summation order is pinned: for each key, values are summed per map task
// in emission order, and the per-task partials are summed in map-task
// order. Map tasks cover fixed-size contiguous record ranges, so the output
// does not depend on the execution mode, the worker count, arrival order of
// task results, or whether the combiner runs.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pktm::mr {

struct KeyValue {
  std::uint64_t key = 0;
  double value = 0.0;
  bool operator==(const KeyValue&) const = default;
};

// One intermediate pair as it sits in a partition file.
struct SpillRecord {
  std::uint64_t key = 0;
  double value = 0.0;
  std::uint32_t map_task_id = 0;
  std::uint32_t emission_index = 0;
  bool operator==(const SpillRecord&) const = default;
};

class Emitter {
 public:
  void emit(std::uint64_t key, double value) { out_.push_back({key, value}); }
  std::vector<KeyValue>& pairs() { return out_; }

 private:
  std::vector<KeyValue> out_;
};

// Must be pure: the same record always yields the same emissions.
using MapFn = std::function<void(std::size_t record, Emitter& out)>;

struct MapInput {
  std::size_t n_records = 0;
  MapFn map;
  // Path to a job manifest that lets an external worker process rebuild
  // `map` on its own. Empty when only forked workers are used.
  std::string manifest;
};

enum class Mode { serial, threaded, multiprocess };

// Test hook: SIGKILL the worker with this registration index right after its
// first TASK_DONE, once it has been handed its next task.
struct FaultInjection {
  int kill_worker_after_first_done = -1;
};

struct JobConfig {
  std::uint32_t n_partitions = 4;
  std::uint32_t n_workers = 2;
  Mode mode = Mode::serial;
  bool combiner_enabled = true;
  std::string spill_dir;  // empty: $PKTM_SPILL_DIR, then the system temp dir
  double task_timeout = 60.0;  // s
  std::uint32_t max_task_retries = 3;
  std::size_t chunk_size = 16;  // records per map task

  // multiprocess only
  std::string listen = "127.0.0.1:0";
  bool spawn_workers = true;  // fork n_workers; otherwise wait for `worker` processes
  std::function<void(const std::string& endpoint)> on_listening;
  FaultInjection fault;
  bool keep_spill = false;

  void validate() const;
};

inline constexpr const char* kSpillDirEnv = "PKTM_SPILL_DIR";

struct JobStats {
  std::size_t map_tasks = 0;
  std::size_t reduce_tasks = 0;
  std::size_t task_attempts = 0;    // map + reduce attempts, retries included
  std::size_t task_retries = 0;
  std::size_t workers_registered = 0;
  std::size_t workers_lost = 0;
  std::size_t intermediate_pairs = 0;  // after the combiner
  bool keys_strictly_ascending = false;
};

struct JobResult {
  std::vector<KeyValue> pairs;  // strictly ascending keys
  JobStats stats;
};

// Throws JobError when a task exhausts its retries, workers are lost beyond
// recovery, or spill I/O fails.
JobResult run_job(const MapInput& input, const JobConfig& config);

template <typename Record, typename Fn>
JobResult run_job(std::span<const Record> records, Fn&& fn, const JobConfig& config) {
  MapInput input;
  input.n_records = records.size();
  input.map = [records, &fn](std::size_t i, Emitter& out) { fn(records[i], out); };
  return run_job(input, config);
}

// FNV-1a over the 8 little-endian bytes of `key`.
std::uint64_t fnv1a64(std::uint64_t key);
std::uint32_t partition_of(std::uint64_t key, std::uint32_t n_partitions);

// One pair per distinct key, summed in input order, keys ascending.
template <typename Pair, typename KeyOf>
std::vector<Pair> combine_by(std::span<const Pair> pairs, KeyOf key_of) {
  using Key = std::decay_t<decltype(key_of(pairs.front()))>;
  std::map<Key, Pair> acc;
  for (const auto& p : pairs) {
    auto [it, inserted] = acc.try_emplace(key_of(p), p);
    if (inserted) {
      it->second.value = 0.0 + p.value;
    } else {
      it->second.value += p.value;
    }
  }
  std::vector<Pair> out;
  out.reserve(acc.size());
  for (auto& [k, p] : acc) out.push_back(p);
  return out;
}

std::vector<KeyValue> combine(std::span<const KeyValue> pairs);

// ---- building blocks shared by every execution mode ----

struct MapTask {
  std::uint32_t task_id = 0;
  std::size_t begin = 0;  // record range [begin, end)
  std::size_t end = 0;
};

// Contiguous, in-order cover of [0, n_records) in chunks of chunk_size.
std::vector<MapTask> plan_map_tasks(std::size_t n_records, std::size_t chunk_size);

// Runs the map function over a task's records and returns one key-sorted
// run per partition (stable in emission order), combined if requested.
std::vector<std::vector<SpillRecord>> run_map_task(const MapFn& map, const MapTask& task,
                                                   std::uint32_t n_partitions, bool combine);

// Reduces one partition. `runs` holds one key-sorted run per map task,
// indexed by map task id.
std::vector<KeyValue> reduce_partition(const std::vector<std::vector<SpillRecord>>& runs);

// Globally ordered merge of per-partition outputs; throws JobError if keys
// are not strictly ascending.
std::vector<KeyValue> merge_partitions(std::vector<std::vector<KeyValue>> parts);

// Unique job directory under the resolved spill root.
std::string make_job_spill_dir(const JobConfig& config);

// Multiprocess driver; lives in coordinator.cpp.
JobResult run_multiprocess(const MapInput& input, const JobConfig& config);

}  // namespace pktm::mr
