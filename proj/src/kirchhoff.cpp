#include "pktm/kirchhoff.hpp"

#include <cmath>
#include <string>

#include "pktm/errors.hpp"

namespace pktm {

void MigrationJob::validate() const {
  try {
    grid.validate();
    params.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (grid.n_offset_bins != binning.bin_count())
    throw ConfigError("grid has " + std::to_string(grid.n_offset_bins) +
                      " offset bins but binning defines " +
                      std::to_string(binning.bin_count()));
}

std::optional<InterpStencil> interp_stencil(const TraceHeader& header, double t) {
  if (!std::isfinite(t)) return std::nullopt;
  const double u = (t - header.t0) / header.dt;
  const double last = static_cast<double>(header.n_samples - 1);
  if (u < 0.0 || u > last) return std::nullopt;
  const double lower = std::floor(u);
  if (lower >= last) return InterpStencil{header.n_samples - 1u, 0.0};
  return InterpStencil{static_cast<std::size_t>(lower), u - lower};
}

double interp_sample(const Trace& trace, double t) {
  const auto st = interp_stencil(trace.header, t);
  if (!st) return 0.0;
  const double s0 = trace.samples[st->index];
  if (st->frac == 0.0) return s0;
  const double s1 = trace.samples[st->index + 1];
  return (1.0 - st->frac) * s0 + st->frac * s1;
}

namespace {

std::vector<double> velocity_per_tau(const MigrationJob& job) {
  std::vector<double> v(job.grid.ntau);
  for (std::uint32_t it = 0; it < job.grid.ntau; ++it) v[it] = job.vel.at(job.grid.tau_at(it));
  return v;
}

// Calls fn(ix, itau, w, t) for every cell the trace with `header` reaches.
template <typename Fn>
void for_each_cell(const TraceHeader& header, const MigrationJob& job,
                   const std::vector<double>& vrms, Fn&& fn) {
  const GridGeometry& g = job.grid;
  const double xs = header.source_x;
  const double xr = header.receiver_x;
  for (std::uint32_t ix = 0; ix < g.nx; ++ix) {
    const double x = g.x_at(ix);
    if (!within_aperture(x, xs, xr, job.params)) continue;
    for (std::uint32_t it = 0; it < g.ntau; ++it) {
      const double tau = g.tau_at(it);
      const double t = dsr_total_time(x, tau, xs, xr, vrms[it]);
      const double w = weight(x, tau, xs, xr, vrms[it], job.params.weight_mode);
      fn(ix, it, w, t);
    }
  }
}

}  // namespace

std::vector<Contribution> migrate_trace(const Trace& trace, const MigrationJob& job) {
  job.validate();
  std::vector<Contribution> out;
  const auto bin = job.binning.bin_of(trace.header.offset());
  if (!bin) return out;
  const auto b = static_cast<std::uint32_t>(*bin);
  const auto vrms = velocity_per_tau(job);
  for_each_cell(trace.header, job, vrms,
                [&](std::uint32_t ix, std::uint32_t it, double w, double t) {
                  const double value = w * interp_sample(trace, t);
                  if (value != 0.0) out.push_back({{b, ix, it}, value});
                });
  return out;
}

std::vector<std::vector<double>> forward_model_raw(const ImageGrid& image,
                                                   const std::vector<TraceHeader>& geometry,
                                                   const MigrationJob& job) {
  job.validate();
  if (image.geometry() != job.grid) throw ConfigError("image geometry does not match job grid");
  const auto vrms = velocity_per_tau(job);
  std::vector<std::vector<double>> out;
  out.reserve(geometry.size());
  for (const auto& header : geometry) {
    header.validate();
    std::vector<double> data(header.n_samples, 0.0);
    const auto bin = job.binning.bin_of(header.offset());
    if (bin) {
      const auto b = static_cast<std::uint32_t>(*bin);
      for_each_cell(header, job, vrms,
                    [&](std::uint32_t ix, std::uint32_t it, double w, double t) {
                      const double m = image.at({b, ix, it});
                      if (m == 0.0) return;
                      const auto st = interp_stencil(header, t);
                      if (!st) return;
                      const double value = w * m;
                      if (st->frac == 0.0) {
                        data[st->index] += value;
                      } else {
                        data[st->index] += (1.0 - st->frac) * value;
                        data[st->index + 1] += st->frac * value;
                      }
                    });
    }
    out.push_back(std::move(data));
  }
  return out;
}

std::vector<Trace> forward_model(const ImageGrid& image, const std::vector<TraceHeader>& geometry,
                                 const MigrationJob& job) {
  auto raw = forward_model_raw(image, geometry, job);
  std::vector<Trace> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Trace tr{geometry[i], {}};
    tr.samples.assign(raw[i].begin(), raw[i].end());
    out.push_back(std::move(tr));
  }
  return out;
}

ImageGrid migrate_survey_serial(const Survey& survey, const MigrationJob& job,
                                std::size_t chunk_size) {
  job.validate();
  if (chunk_size == 0) throw ConfigError("chunk size must be >= 1");
  ImageGrid total(job.grid);
  ImageGrid block(job.grid);
  auto flush = [&] {
    auto dst = total.values();
    auto src = block.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] += src[i];
      src[i] = 0.0;
    }
  };
  for (std::size_t i = 0; i < survey.traces.size(); ++i) {
    for (const auto& c : migrate_trace(survey.traces[i], job)) block.at(c.key) += c.value;
    if ((i + 1) % chunk_size == 0 || i + 1 == survey.traces.size()) flush();
  }
  return total;
}

StackedImage stack_offsets(const ImageGrid& image) {
  const GridGeometry& g = image.geometry();
  StackedImage out{g.nx, g.ntau, std::vector<double>(static_cast<std::size_t>(g.nx) * g.ntau, 0.0)};
  const auto values = image.values();
  const std::size_t plane = out.values.size();
  for (std::uint32_t b = 0; b < g.n_offset_bins; ++b)
    for (std::size_t i = 0; i < plane; ++i) out.values[i] += values[b * plane + i];
  return out;
}

}  // namespace pktm
