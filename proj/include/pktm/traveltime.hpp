#pragma once

// Double-square-root traveltimes and Kirchhoff amplitude weights for
// straight rays at the RMS velocity of the image time.

#include "pktm/model.hpp"

namespace pktm {

enum class WeightMode { unit, obliquity };

struct KernelParams {
  double aperture = 1.0e30;  // m, half-width around the source-receiver midpoint
  WeightMode weight_mode = WeightMode::unit;

  void validate() const;
};

// sqrt((tau/2)^2 + (h/vrms)^2). Throws DomainError for vrms <= 0.
double one_way_time(double h, double tau, double vrms);

// Source leg plus receiver leg from image point (x_img, tau), velocity taken
// at tau.
double dsr_total_time(double x_img, double tau, double xs, double xr, const VelocityModel& vel);

// Same as above with the velocity already evaluated.
double dsr_total_time(double x_img, double tau, double xs, double xr, double vrms);

// unit: 1. obliquity: cos(theta_s) * cos(theta_r) with cos = (tau/2) / leg time.
double weight(double x_img, double tau, double xs, double xr, const VelocityModel& vel,
              WeightMode mode);
double weight(double x_img, double tau, double xs, double xr, double vrms, WeightMode mode);

// |x_img - midpoint| <= aperture, boundary inclusive.
bool within_aperture(double x_img, double xs, double xr, const KernelParams& params);

}  // namespace pktm
