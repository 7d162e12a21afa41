#pragma once

// Kirchhoff time migration of single traces, its exact adjoint, and a
// plain-loop whole-survey reference used to check the distributed path.

#include <cstddef>
#include <optional>
#include <vector>

#include "pktm/model.hpp"
#include "pktm/traveltime.hpp"

namespace pktm {

struct MigrationJob {
  GridGeometry grid;
  VelocityModel vel = VelocityModel::constant(2000.0);
  KernelParams params;
  OffsetBinning binning;

  // Throws ConfigError when grid.n_offset_bins != binning.bin_count() or a
  // component is invalid.
  void validate() const;
};

// Bracketing sample index and fractional position for time t on a trace axis.
struct InterpStencil {
  std::size_t index;
  double frac;  // in [0, 1); 0 when t falls on the last sample
};

std::optional<InterpStencil> interp_stencil(const TraceHeader& header, double t);

// Linear interpolation; 0 outside [t0, t_end].
double interp_sample(const Trace& trace, double t);

// Per-trace migration. Cells are visited in ascending (ix, itau); zero
// contributions are not emitted. A trace whose offset falls in no bin
// yields nothing.
std::vector<Contribution> migrate_trace(const Trace& trace, const MigrationJob& job);

// Adjoint of migration in double precision, one sample vector per header.
std::vector<std::vector<double>> forward_model_raw(const ImageGrid& image,
                                                   const std::vector<TraceHeader>& geometry,
                                                   const MigrationJob& job);

// forward_model_raw rounded to single-precision traces.
std::vector<Trace> forward_model(const ImageGrid& image, const std::vector<TraceHeader>& geometry,
                                 const MigrationJob& job);

inline constexpr std::size_t kDefaultChunkSize = 16;

// Reference migration of a whole survey. Traces are summed in trace_id
// order in blocks of `chunk_size`: each block is accumulated into its own
// partial image first, then added to the total. This is the summation order
// the map-reduce runtime reproduces, so both paths agree bit for bit.
ImageGrid migrate_survey_serial(const Survey& survey, const MigrationJob& job,
                                std::size_t chunk_size = kDefaultChunkSize);

StackedImage stack_offsets(const ImageGrid& image);

}  // namespace pktm
