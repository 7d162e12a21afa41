#include "pktm/selftest.hpp"

#include <cmath>
#include <random>

#include "pktm/kirchhoff.hpp"

namespace pktm {

double AdjointCheck::relative_error() const {
  const double denom = std::fabs(data_side) + std::fabs(image_side);
  return denom == 0.0 ? 0.0 : std::fabs(data_side - image_side) / denom;
}

AdjointCheck adjoint_dot_test(std::uint64_t seed, std::uint32_t nx, std::uint32_t ntau,
                              std::uint32_t n_traces) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  MigrationJob job;
  job.grid = {0.0, 25.0, nx, 0.0, 0.008, ntau, 2};
  job.binning = OffsetBinning({0.0, 500.0, 1.0e6});
  job.vel = VelocityModel({{0.0, 1800.0}, {0.4, 2400.0}});
  job.params.aperture = 600.0;

  const double span = 25.0 * nx;
  std::vector<TraceHeader> headers;
  for (std::uint32_t i = 0; i < n_traces; ++i) {
    TraceHeader h;
    h.trace_id = i;
    h.source_x = span * 0.5 * (1.0 + uni(rng));
    h.receiver_x = span * 0.5 * (1.0 + uni(rng));
    h.dt = 0.004;
    h.n_samples = 400;
    headers.push_back(h);
  }

  ImageGrid m(job.grid);
  for (auto& v : m.values()) v = uni(rng);

  std::vector<Trace> d;
  for (const auto& h : headers) {
    Trace t = Trace::zeros(h);
    for (auto& s : t.samples) s = static_cast<float>(uni(rng));
    d.push_back(std::move(t));
  }

  AdjointCheck out;
  const auto lm = forward_model_raw(m, headers, job);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t k = 0; k < d[i].samples.size(); ++k) out.data_side += lm[i][k] * d[i].samples[k];

  ImageGrid ltd(job.grid);
  for (const auto& tr : d)
    for (const auto& c : migrate_trace(tr, job)) ltd.at(c.key) += c.value;
  const auto mv = m.values();
  const auto av = ltd.values();
  for (std::size_t i = 0; i < mv.size(); ++i) out.image_side += mv[i] * av[i];
  return out;
}

}  // namespace pktm
