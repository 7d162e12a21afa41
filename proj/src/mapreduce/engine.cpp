#include "pktm/mapreduce/engine.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <queue>
#include <thread>

#include "pktm/errors.hpp"

namespace pktm::mr {

void JobConfig::validate() const {
  if (n_partitions == 0) throw ConfigError("n_partitions must be >= 1");
  if (n_workers == 0) throw ConfigError("n_workers must be >= 1");
  if (!(task_timeout > 0.0)) throw ConfigError("task_timeout must be > 0");
  if (chunk_size == 0) throw ConfigError("chunk_size must be >= 1");
}

std::uint64_t fnv1a64(std::uint64_t key) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (int i = 0; i < 8; ++i) {
    h ^= (key >> (8 * i)) & 0xFFu;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint32_t partition_of(std::uint64_t key, std::uint32_t n_partitions) {
  return static_cast<std::uint32_t>(fnv1a64(key) % n_partitions);
}

std::vector<KeyValue> combine(std::span<const KeyValue> pairs) {
  return combine_by(pairs, [](const KeyValue& p) { return p.key; });
}

std::vector<MapTask> plan_map_tasks(std::size_t n_records, std::size_t chunk_size) {
  if (chunk_size == 0) throw ConfigError("chunk_size must be >= 1");
  std::vector<MapTask> tasks;
  for (std::size_t begin = 0; begin < n_records; begin += chunk_size) {
    MapTask t;
    t.task_id = static_cast<std::uint32_t>(tasks.size());
    t.begin = begin;
    t.end = std::min(n_records, begin + chunk_size);
    tasks.push_back(t);
  }
  return tasks;
}

std::vector<std::vector<SpillRecord>> run_map_task(const MapFn& map, const MapTask& task,
                                                   std::uint32_t n_partitions, bool combine) {
  Emitter emitter;
  for (std::size_t i = task.begin; i < task.end; ++i) map(i, emitter);

  std::vector<SpillRecord> records;
  records.reserve(emitter.pairs().size());
  std::uint32_t index = 0;
  for (const auto& kv : emitter.pairs())
    records.push_back({kv.key, kv.value, task.task_id, index++});
  if (combine)
    records = combine_by(std::span<const SpillRecord>(records),
                         [](const SpillRecord& r) { return r.key; });

  std::vector<std::vector<SpillRecord>> parts(n_partitions);
  for (const auto& r : records) parts[partition_of(r.key, n_partitions)].push_back(r);
  for (auto& p : parts)
    std::stable_sort(p.begin(), p.end(),
                     [](const SpillRecord& a, const SpillRecord& b) { return a.key < b.key; });
  return parts;
}

std::vector<KeyValue> reduce_partition(const std::vector<std::vector<SpillRecord>>& runs) {
  using Head = std::pair<std::uint64_t, std::size_t>;  // (key, run index)
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;
  std::vector<std::size_t> pos(runs.size(), 0);
  for (std::size_t t = 0; t < runs.size(); ++t)
    if (!runs[t].empty()) heads.push({runs[t][0].key, t});

  std::vector<KeyValue> out;
  while (!heads.empty()) {
    const std::uint64_t key = heads.top().first;
    double total = 0.0;
    while (!heads.empty() && heads.top().first == key) {
      const std::size_t t = heads.top().second;
      heads.pop();
      const auto& run = runs[t];
      double partial = 0.0;
      while (pos[t] < run.size() && run[pos[t]].key == key) partial += run[pos[t]++].value;
      total += partial;
      if (pos[t] < run.size()) {
        if (run[pos[t]].key < key) throw JobError("map output run is not key-sorted");
        heads.push({run[pos[t]].key, t});
      }
    }
    out.push_back({key, total});
  }
  return out;
}

std::vector<KeyValue> merge_partitions(std::vector<std::vector<KeyValue>> parts) {
  using Head = std::pair<std::uint64_t, std::size_t>;
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;
  std::vector<std::size_t> pos(parts.size(), 0);
  std::size_t total = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    total += parts[p].size();
    if (!parts[p].empty()) heads.push({parts[p][0].key, p});
  }
  std::vector<KeyValue> out;
  out.reserve(total);
  while (!heads.empty()) {
    const auto [key, p] = heads.top();
    heads.pop();
    if (!out.empty() && !(out.back().key < key))
      throw JobError("reduced keys not strictly ascending at key " + std::to_string(key));
    out.push_back(parts[p][pos[p]++]);
    if (pos[p] < parts[p].size()) heads.push({parts[p][pos[p]].key, p});
  }
  return out;
}

std::string make_job_spill_dir(const JobConfig& config) {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  fs::path root;
  if (const char* env = std::getenv(kSpillDirEnv); env != nullptr && *env != '\0') {
    root = env;
  } else if (!config.spill_dir.empty()) {
    root = config.spill_dir;
  } else {
    root = fs::temp_directory_path();
  }
  const fs::path dir = root / ("pktm-job-" + std::to_string(::getpid()) + "-" +
                               std::to_string(counter.fetch_add(1)));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw JobError("cannot create spill directory '" + dir.string() + "': " + ec.message());
  return dir.string();
}

namespace {

// Runs `body(i)` for i in [0, n) on `threads` threads, retrying failures.
// Returns attempt count; rethrows as JobError once a task exceeds its retries.
std::size_t run_tasks(std::size_t n, std::uint32_t threads, std::uint32_t max_retries,
                      const char* what, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> attempts{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::string error;

  auto loop = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      for (std::uint32_t attempt = 0;; ++attempt) {
        attempts.fetch_add(1);
        try {
          body(i);
          break;
        } catch (const std::exception& e) {
          if (attempt >= max_retries) {
            std::lock_guard lock(err_mu);
            if (!failed.exchange(true))
              error = std::string(what) + " task " + std::to_string(i) + " failed after " +
                      std::to_string(attempt + 1) + " attempts: " + e.what();
            return;
          }
        }
      }
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(threads, n);
  if (n_threads <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw JobError(error);
  return attempts.load();
}

JobResult run_in_process(const MapInput& input, const JobConfig& config) {
  const auto tasks = plan_map_tasks(input.n_records, config.chunk_size);
  const std::uint32_t threads = config.mode == Mode::serial ? 1 : config.n_workers;
  const std::uint32_t R = config.n_partitions;

  JobResult result;
  result.stats.map_tasks = tasks.size();
  result.stats.reduce_tasks = R;

  std::vector<std::vector<std::vector<SpillRecord>>> map_out(tasks.size());
  result.stats.task_attempts +=
      run_tasks(tasks.size(), threads, config.max_task_retries, "map", [&](std::size_t i) {
        map_out[i] = run_map_task(input.map, tasks[i], R, config.combiner_enabled);
      });
  for (const auto& parts : map_out)
    for (const auto& p : parts) result.stats.intermediate_pairs += p.size();

  std::vector<std::vector<KeyValue>> reduced(R);
  result.stats.task_attempts +=
      run_tasks(R, threads, config.max_task_retries, "reduce", [&](std::size_t p) {
        std::vector<std::vector<SpillRecord>> runs(tasks.size());
        for (std::size_t t = 0; t < tasks.size(); ++t) runs[t] = map_out[t][p];
        reduced[p] = reduce_partition(runs);
      });
  result.stats.task_retries =
      result.stats.task_attempts - result.stats.map_tasks - result.stats.reduce_tasks;

  result.pairs = merge_partitions(std::move(reduced));
  result.stats.keys_strictly_ascending = true;
  return result;
}

}  // namespace

JobResult run_job(const MapInput& input, const JobConfig& config) {
  config.validate();
  if (input.n_records > 0 && !input.map) throw ConfigError("map function is empty");
  if (config.mode == Mode::multiprocess) return run_multiprocess(input, config);
  return run_in_process(input, config);
}

}  // namespace pktm::mr
