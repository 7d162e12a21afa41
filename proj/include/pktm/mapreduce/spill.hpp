#pragma once

// KVP1 partition files: "KVP1", u32 LE pair count, then per pair
// u64 LE key, f64 LE value, u32 LE map_task_id, u32 LE emission_index.
// Keys are nondecreasing within a file. Files are published by atomic
// rename, so a file is either complete or absent.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pktm/mapreduce/engine.hpp"

namespace pktm::mr {

inline constexpr std::string_view kPartitionMagic = "KVP1";
inline constexpr std::size_t kSpillRecordBytes = 24;

std::string encode_partition(const std::vector<SpillRecord>& records);
// Throws FormatError / TruncationError / CorruptionError.
std::vector<SpillRecord> decode_partition(std::string_view bytes);

void write_partition_file(const std::string& path, const std::vector<SpillRecord>& records);
std::vector<SpillRecord> read_partition_file(const std::string& path);

std::string map_output_path(const std::string& dir, std::uint32_t map_task,
                            std::uint32_t partition);
std::string reduce_output_path(const std::string& dir, std::uint32_t partition);

}  // namespace pktm::mr
