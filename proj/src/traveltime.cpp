#include "pktm/traveltime.hpp"

#include <cmath>

#include "pktm/errors.hpp"

namespace pktm {

void KernelParams::validate() const {
  if (!std::isfinite(aperture) || aperture < 0.0)
    throw ValidationError("aperture must be finite and >= 0");
}

double one_way_time(double h, double tau, double vrms) {
  if (!(vrms > 0.0)) throw DomainError("velocity must be > 0");
  const double half = 0.5 * tau;
  const double horizontal = h / vrms;
  return std::sqrt(half * half + horizontal * horizontal);
}

double dsr_total_time(double x_img, double tau, double xs, double xr, double vrms) {
  return one_way_time(std::fabs(x_img - xs), tau, vrms) +
         one_way_time(std::fabs(x_img - xr), tau, vrms);
}

double dsr_total_time(double x_img, double tau, double xs, double xr, const VelocityModel& vel) {
  return dsr_total_time(x_img, tau, xs, xr, vel.at(tau));
}

double weight(double x_img, double tau, double xs, double xr, double vrms, WeightMode mode) {
  if (mode == WeightMode::unit) return 1.0;
  const double ts = one_way_time(std::fabs(x_img - xs), tau, vrms);
  const double tr = one_way_time(std::fabs(x_img - xr), tau, vrms);
  if (tau == 0.0) return (ts == 0.0 && tr == 0.0) ? 1.0 : 0.0;
  const double half = 0.5 * tau;
  // Each ratio is <= 1 mathematically; clamp the rounding.
  const double w = (half / ts) * (half / tr);
  return w > 1.0 ? 1.0 : w;
}

double weight(double x_img, double tau, double xs, double xr, const VelocityModel& vel,
              WeightMode mode) {
  if (mode == WeightMode::unit) return 1.0;
  return weight(x_img, tau, xs, xr, vel.at(tau), mode);
}

bool within_aperture(double x_img, double xs, double xr, const KernelParams& params) {
  return std::fabs(x_img - 0.5 * (xs + xr)) <= params.aperture;
}

}  // namespace pktm
