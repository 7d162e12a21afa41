#pragma once

// Shared synthetic setups for the imaging tests.

#include "pktm/kirchhoff.hpp"
#include "pktm/synthetics.hpp"

namespace pktm::testing {

inline constexpr double kTrueVelocity = 2000.0;
inline constexpr double kScattererX = 500.0;
inline constexpr double kScattererTau = 0.8;

// 20 shots x 20 receivers every 50 m, one point diffractor, 25 Hz Ricker.
inline Acquisition diffractor_acquisition() { return {20, 0.0, 50.0, 20, 0.0, 50.0, 501, 0.004}; }

inline OffsetBinning diffractor_binning() { return OffsetBinning({0.0, 250.0, 500.0, 750.0, 1000.0}); }

inline Survey diffractor_survey(double amplitude = 1.0) {
  return synth_survey(make_acquisition(diffractor_acquisition()),
                      {{kScattererX, kScattererTau, amplitude}},
                      VelocityModel::constant(kTrueVelocity), Wavelet{25.0}, diffractor_binning());
}

// 41 x 401 cells at 25 m / 4 ms, four offset bins.
inline MigrationJob diffractor_job(double vrms = kTrueVelocity) {
  MigrationJob job;
  job.grid = {0.0, 25.0, 41, 0.0, 0.004, 401, 4};
  job.binning = diffractor_binning();
  job.vel = VelocityModel::constant(vrms);
  job.params.aperture = 2000.0;
  return job;
}

inline CellKey scatterer_cell() { return {0, 20, 200}; }  // x = 500 m, tau = 0.8 s

}  // namespace pktm::testing
