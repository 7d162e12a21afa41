#include "pktm/synthetics.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pktm/errors.hpp"
#include "pktm/traveltime.hpp"

namespace pktm {

std::vector<TraceHeader> make_acquisition(const Acquisition& acq) {
  if (acq.k_sources == 0 || acq.l_receivers == 0 || acq.n_samples == 0)
    throw DomainError("source, receiver and sample counts must be >= 1");
  if (!(acq.source_dx > 0.0) || !(acq.recv_dx > 0.0) || !(acq.dt > 0.0))
    throw DomainError("spacings and dt must be > 0");
  std::vector<TraceHeader> out;
  out.reserve(static_cast<std::size_t>(acq.k_sources) * acq.l_receivers);
  for (std::uint32_t s = 0; s < acq.k_sources; ++s) {
    for (std::uint32_t r = 0; r < acq.l_receivers; ++r) {
      TraceHeader h;
      h.trace_id = s * acq.l_receivers + r;
      h.source_x = acq.source_x0 + s * acq.source_dx;
      h.receiver_x = acq.recv_x0 + r * acq.recv_dx;
      h.t0 = 0.0;
      h.dt = acq.dt;
      h.n_samples = acq.n_samples;
      out.push_back(h);
    }
  }
  return out;
}

double ricker(double peak_frequency, double t) {
  const double a = std::numbers::pi * std::numbers::pi * peak_frequency * peak_frequency * t * t;
  return (1.0 - 2.0 * a) * std::exp(-a);
}

std::vector<Scatterer> flat_reflector(double tau, double x0, double x1, double spacing,
                                      double amplitude) {
  if (!(spacing > 0.0) || x1 < x0) throw DomainError("reflector needs x1 >= x0 and spacing > 0");
  std::vector<Scatterer> out;
  const auto n = static_cast<std::size_t>(std::floor((x1 - x0) / spacing)) + 1;
  for (std::size_t i = 0; i < n; ++i) out.push_back({x0 + i * spacing, tau, amplitude});
  return out;
}

Survey synth_survey(const std::vector<TraceHeader>& headers,
                    const std::vector<Scatterer>& scatterers, const VelocityModel& vel,
                    const Wavelet& wavelet, const OffsetBinning& binning,
                    const SynthOptions& options) {
  if (!(wavelet.peak_frequency > 0.0)) throw DomainError("peak frequency must be > 0");
  for (const auto& sc : scatterers)
    if (!(sc.tau >= 0.0) || !std::isfinite(sc.amplitude) || !std::isfinite(sc.x))
      throw DomainError("scatterer needs tau >= 0 and finite position/amplitude");

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.noise_std > 0.0 ? options.noise_std : 1.0);

  Survey survey;
  survey.offset_bins = binning;
  survey.traces.reserve(headers.size());
  std::vector<double> acc;
  for (const auto& h : headers) {
    h.validate();
    acc.assign(h.n_samples, 0.0);
    for (const auto& sc : scatterers) {
      const double t_event = dsr_total_time(sc.x, sc.tau, h.source_x, h.receiver_x, vel);
      for (std::uint32_t i = 0; i < h.n_samples; ++i) {
        const double t = h.t0 + i * h.dt;
        acc[i] += sc.amplitude * ricker(wavelet.peak_frequency, t - t_event);
      }
    }
    if (options.noise_std > 0.0)
      for (auto& v : acc) v += noise(rng);
    Trace tr{h, std::vector<float>(acc.begin(), acc.end())};
    survey.traces.push_back(std::move(tr));
  }
  return survey;
}

}  // namespace pktm
