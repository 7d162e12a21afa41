#include "pktm/mapreduce/spill.hpp"

#include <cstdio>

#include "../byteio.hpp"
#include "pktm/errors.hpp"

namespace pktm::mr {

std::string encode_partition(const std::vector<SpillRecord>& records) {
  if (records.size() > 0xFFFFFFFFu) throw JobError("partition too large for KVP1");
  detail::ByteWriter w;
  w.bytes(kPartitionMagic);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    w.u64(r.key);
    w.f64(r.value);
    w.u32(r.map_task_id);
    w.u32(r.emission_index);
  }
  return w.take();
}

std::vector<SpillRecord> decode_partition(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 || r.bytes(4) != kPartitionMagic)
    throw FormatError("bad partition file magic", 0);
  const std::uint32_t count = r.u32();
  if (r.remaining() != static_cast<std::uint64_t>(count) * kSpillRecordBytes)
    throw CorruptionError("partition declares " + std::to_string(count) + " pairs but holds " +
                              std::to_string(r.remaining()) + " payload bytes",
                          r.offset());
  std::vector<SpillRecord> out(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& rec = out[i];
    rec.key = r.u64();
    rec.value = r.f64();
    rec.map_task_id = r.u32();
    rec.emission_index = r.u32();
    if (i > 0 && rec.key < out[i - 1].key)
      throw CorruptionError("partition keys out of order", r.offset() - kSpillRecordBytes);
  }
  return out;
}

void write_partition_file(const std::string& path, const std::vector<SpillRecord>& records) {
  detail::write_file_atomic(path, encode_partition(records));
}

std::vector<SpillRecord> read_partition_file(const std::string& path) {
  return decode_partition(detail::read_file(path));
}

std::string map_output_path(const std::string& dir, std::uint32_t map_task,
                            std::uint32_t partition) {
  char name[64];
  std::snprintf(name, sizeof name, "/map-%06u-p%04u.kvp", map_task, partition);
  return dir + name;
}

std::string reduce_output_path(const std::string& dir, std::uint32_t partition) {
  char name[64];
  std::snprintf(name, sizeof name, "/reduce-p%04u.kvp", partition);
  return dir + name;
}

}  // namespace pktm::mr
