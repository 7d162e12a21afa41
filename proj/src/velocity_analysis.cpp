#include "pktm/velocity_analysis.hpp"

#include <cstdlib>

#include "pktm/errors.hpp"

namespace pktm {

Migrator serial_migrator(std::size_t chunk_size) {
  return [chunk_size](const Survey& survey, const MigrationJob& job) {
    return migrate_survey_serial(survey, job, chunk_size);
  };
}

double focus_metric(const ImageGrid& image) {
  double sum = 0.0;
  for (double v : stack_offsets(image).values) sum += v * v;
  return sum;
}

int MoveoutResult::max_abs_lag() const {
  int m = 0;
  for (int l : lags) m = std::max(m, std::abs(l));
  return m;
}

MoveoutResult residual_moveout(const ImageGrid& image, std::uint32_t ix, int max_shift) {
  const auto& g = image.geometry();
  if (g.n_offset_bins < 2) throw DomainError("residual moveout needs at least two offset bins");
  if (ix >= g.nx) throw BoundsError("lateral index " + std::to_string(ix) + " outside grid");
  if (max_shift < 0) throw DomainError("max_shift must be >= 0");

  const auto values = image.values();
  auto column = [&](std::uint32_t b) {
    return values.subspan((static_cast<std::size_t>(b) * g.nx + ix) * g.ntau, g.ntau);
  };
  auto all_zero = [](std::span<const double> c) {
    for (double v : c)
      if (v != 0.0) return false;
    return true;
  };

  const auto ref = column(0);
  const bool ref_zero = all_zero(ref);
  const int n = static_cast<int>(g.ntau);
  MoveoutResult out;
  out.lags.assign(g.n_offset_bins, 0);
  out.degenerate.assign(g.n_offset_bins, ref_zero);
  for (std::uint32_t b = 1; b < g.n_offset_bins; ++b) {
    const auto col = column(b);
    if (ref_zero || all_zero(col)) {
      out.degenerate[b] = true;
      continue;
    }
    double best = 0.0;
    int best_shift = 0;
    bool have = false;
    // 0, -1, +1, -2, +2, ...: strict improvement keeps the declared tie order.
    for (int k = 0; k <= 2 * max_shift; ++k) {
      const int s = (k % 2 == 1) ? -(k + 1) / 2 : k / 2;
      double cc = 0.0;
      for (int t = std::max(0, -s); t < n && t + s < n; ++t) cc += ref[t] * col[t + s];
      if (!have || cc > best) {
        best = cc;
        best_shift = s;
        have = true;
      }
    }
    out.lags[b] = best_shift;
  }
  return out;
}

std::uint32_t strongest_lateral_index(const ImageGrid& image) {
  const auto stacked = stack_offsets(image);
  std::uint32_t best = 0;
  double best_energy = -1.0;
  for (std::uint32_t ix = 0; ix < stacked.nx; ++ix) {
    double e = 0.0;
    for (std::uint32_t it = 0; it < stacked.ntau; ++it) e += stacked.at(ix, it) * stacked.at(ix, it);
    if (e > best_energy) {
      best_energy = e;
      best = ix;
    }
  }
  return best;
}

ScanResult constant_velocity_scan(const Survey& survey, std::span<const double> candidates,
                                  const MigrationJob& job_template, const Migrator& migrate) {
  if (candidates.empty()) throw DomainError("velocity scan needs at least one candidate");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i] > 0.0)) throw DomainError("scan velocities must be > 0");
    if (i > 0 && !(candidates[i] > candidates[i - 1]))
      throw DomainError("scan velocities must be strictly increasing");
  }
  ScanResult result;
  for (double v : candidates) {
    MigrationJob job = job_template;
    job.vel = VelocityModel::constant(v);
    const double metric = focus_metric(migrate(survey, job));
    result.candidates.push_back({v, metric});
    if (metric > result.candidates[result.best].focus_metric) result.best = result.candidates.size() - 1;
  }
  return result;
}

VelocityModel update_velocity(const VelocityModel& /*current*/, const ScanResult& scan) {
  if (scan.best >= scan.candidates.size()) throw DomainError("scan has no valid best index");
  return VelocityModel::constant(scan.candidates[scan.best].vrms);
}

LoopReport imaging_loop(const Survey& survey, const VelocityModel& v0, const LoopParams& params,
                        const MigrationJob& job_template, const Migrator& migrate) {
  if (params.max_iterations == 0) throw DomainError("max_iterations must be >= 1");
  if (params.rmo_tolerance < 0) throw DomainError("rmo_tolerance must be >= 0");

  LoopReport report;
  VelocityModel vel = v0;
  for (std::uint32_t iter = 1;; ++iter) {
    MigrationJob job = job_template;
    job.vel = vel;
    const ImageGrid image = migrate(survey, job);
    const std::uint32_t ix = strongest_lateral_index(image);
    const MoveoutResult rmo = residual_moveout(image, ix, params.max_shift);

    report.iterations = iter;
    report.history.push_back({vel, rmo.max_abs_lag(), ix, rmo.lags});
    const bool within = rmo.max_abs_lag() <= params.rmo_tolerance;
    if (within || iter == params.max_iterations) {
      report.converged = within;
      report.final_velocity = vel;
      report.final_image = stack_offsets(image);
      return report;
    }
    vel = update_velocity(vel, constant_velocity_scan(survey, params.candidates, job_template, migrate));
  }
}

}  // namespace pktm
