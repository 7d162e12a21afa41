#pragma once

#include <functional>
#include <string>

#include "pktm/mapreduce/engine.hpp"

namespace pktm::mr {

// Rebuilds a job's map function from the manifest path carried by
// TASK_ASSIGN.
using MapResolver = std::function<MapInput(const std::string& manifest)>;

struct WorkerOptions {
  double heartbeat_interval = 0.5;  // s
};

// Connects to a coordinator, registers, and serves map and reduce tasks
// until SHUTDOWN or the connection closes. Returns the number of tasks
// served. Throws IoError if the coordinator is unreachable.
std::size_t run_worker(const std::string& endpoint, const MapResolver& resolver,
                       const WorkerOptions& options = {});

// Reduce step as run by a worker: reads every map task's file for
// `partition`, reduces, and publishes the KVP1 reduce output. Returns its path.
std::string reduce_from_spill(const std::string& spill_dir, std::uint32_t partition,
                              std::uint32_t n_map_tasks);

}  // namespace pktm::mr
