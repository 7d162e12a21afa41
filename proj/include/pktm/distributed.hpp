#pragma once

// Kirchhoff migration expressed as a map-reduce job: each trace is a record,
// the map step migrates it into (cell ordinal, amplitude) pairs, and the
// reduce step sums every occurrence of a cell into the image.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pktm/kirchhoff.hpp"
#include "pktm/mapreduce/engine.hpp"
#include "pktm/mapreduce/worker.hpp"

namespace pktm {

std::vector<Contribution> combine(std::span<const Contribution> contribs);

std::uint32_t partition_of(const CellKey& key, const GridGeometry& grid, std::uint32_t n_partitions);

// Cells from strictly ascending (key, total) pairs; absent cells stay 0.
// Throws ContractError for repeated or descending keys, BoundsError for keys
// outside the grid.
ImageGrid reassemble_image(std::span<const std::pair<CellKey, double>> reduced,
                           const GridGeometry& grid);
ImageGrid reassemble_image(std::span<const mr::KeyValue> reduced, const GridGeometry& grid);

// The map step over `survey`. The survey must outlive the returned input.
mr::MapInput migration_map_input(const Survey& survey, const MigrationJob& job);

// Migration through the runtime. With a non-empty `survey_path` (the file
// the survey was read from) a manifest is written so that external
// `pktm worker` processes can join.
ImageGrid migrate_survey_mapreduce(const Survey& survey, const MigrationJob& job,
                                   const mr::JobConfig& config,
                                   const std::string& survey_path = {},
                                   mr::JobStats* stats = nullptr);

// key=value manifest naming the survey file and every migration parameter.
void write_migration_manifest(const std::string& path, const std::string& survey_path,
                              const MigrationJob& job);
std::pair<std::string, MigrationJob> read_migration_manifest(const std::string& path);

// Resolver for worker processes: loads the manifest and its survey.
mr::MapInput resolve_migration_manifest(const std::string& manifest_path);

}  // namespace pktm
