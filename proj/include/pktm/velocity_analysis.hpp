#pragma once

// Migration velocity analysis: measure the velocity error from the
// disagreement between common-offset images, rescan, re-migrate, and stack
// once the images agree.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pktm/kirchhoff.hpp"

namespace pktm {

// Migrates a survey with a fully specified job. Lets the analysis run on
// the serial reference or on the map-reduce runtime interchangeably.
using Migrator = std::function<ImageGrid(const Survey&, const MigrationJob&)>;

Migrator serial_migrator(std::size_t chunk_size = kDefaultChunkSize);

struct ScanCandidate {
  double vrms = 0.0;
  double focus_metric = 0.0;
};

struct ScanResult {
  std::vector<ScanCandidate> candidates;
  std::size_t best = 0;  // maximal metric, ties toward the lower velocity
};

// Sum of squared stacked amplitudes.
double focus_metric(const ImageGrid& image);

struct MoveoutResult {
  std::vector<int> lags;          // samples, lags[0] == 0
  std::vector<bool> degenerate;   // column (or the reference) all zero
  int max_abs_lag() const;
};

// For every offset bin, the shift s in [-max_shift, max_shift] maximizing
// sum_t ref[t] * col[t + s], with ref the bin-0 column at `ix`. Ties go to
// smaller |s|, then to negative s.
MoveoutResult residual_moveout(const ImageGrid& image, std::uint32_t ix, int max_shift = 10);

// Lateral index whose stacked column carries the most energy (lowest index
// on ties).
std::uint32_t strongest_lateral_index(const ImageGrid& image);

// Migrates once per candidate with a constant-velocity model. `candidates`
// must be non-empty and strictly increasing.
ScanResult constant_velocity_scan(const Survey& survey, std::span<const double> candidates,
                                  const MigrationJob& job_template,
                                  const Migrator& migrate = serial_migrator());

// Constant model at the scan's best velocity.
VelocityModel update_velocity(const VelocityModel& current, const ScanResult& scan);

struct LoopParams {
  std::vector<double> candidates;
  std::uint32_t max_iterations = 5;
  int rmo_tolerance = 1;  // samples
  int max_shift = 10;     // samples searched by residual_moveout
};

struct LoopIteration {
  VelocityModel velocity;  // model this iteration migrated with
  int max_abs_lag = 0;     // the error measure
  std::uint32_t ix = 0;    // gather the lag was measured on
  std::vector<int> lags;
};

struct LoopReport {
  std::uint32_t iterations = 0;
  std::vector<LoopIteration> history;
  bool converged = false;
  VelocityModel final_velocity = VelocityModel::constant(1.0);
  StackedImage final_image;
};

// migrate -> residual moveout at the strongest gather -> stop if within
// tolerance, else scan and update. Stacks the last image on exit.
LoopReport imaging_loop(const Survey& survey, const VelocityModel& v0, const LoopParams& params,
                        const MigrationJob& job_template,
                        const Migrator& migrate = serial_migrator());

}  // namespace pktm
