#pragma once

// Acquisition geometry and kinematic point-diffractor synthetics.

#include <cstdint>
#include <vector>

#include "pktm/model.hpp"

namespace pktm {

struct Scatterer {
  double x = 0.0;    // m
  double tau = 0.0;  // s, two-way vertical time
  double amplitude = 1.0;
};

struct Wavelet {
  double peak_frequency = 25.0;  // Hz, Ricker
};

struct Acquisition {
  std::uint32_t k_sources = 1;
  double source_x0 = 0.0;
  double source_dx = 25.0;
  std::uint32_t l_receivers = 1;
  double recv_x0 = 0.0;
  double recv_dx = 25.0;
  std::uint32_t n_samples = 751;
  double dt = 0.004;
};

// K*L headers, source-major, trace_id = s*L + r.
std::vector<TraceHeader> make_acquisition(const Acquisition& acq);

// (1 - 2 pi^2 f^2 t^2) exp(-pi^2 f^2 t^2)
double ricker(double peak_frequency, double t);

// Horizontal reflector at `tau` as a dense line of scatterers on [x0, x1].
std::vector<Scatterer> flat_reflector(double tau, double x0, double x1, double spacing,
                                      double amplitude);

struct SynthOptions {
  double noise_std = 0.0;  // additive white noise, 0 disables
  std::uint64_t seed = 1;
};

// Sum over scatterers of amplitude * ricker(t - t*), with t* the DSR time
// from the scatterer to the trace's source and receiver.
Survey synth_survey(const std::vector<TraceHeader>& headers,
                    const std::vector<Scatterer>& scatterers, const VelocityModel& vel,
                    const Wavelet& wavelet, const OffsetBinning& binning,
                    const SynthOptions& options = {});

}  // namespace pktm
