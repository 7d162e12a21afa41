#pragma once

// Binary survey and image files, velocity text files, PGM export.
//
// SMR1 survey:  "SMR1", u32 trace count, then per trace
//               f64 source_x, f64 receiver_x, f64 t0, f64 dt, u32 n_samples,
//               n_samples x f32 samples.
// SMI1 image:   "SMI1", f64 x_min, dx, tau_min, dtau, u32 nx, ntau,
//               n_offset_bins, then f64 values in (b, ix, itau) order.
// All fields little-endian.

#include <string>
#include <string_view>
#include <vector>

#include "pktm/model.hpp"

namespace pktm {

std::string encode_survey(const Survey& survey);
// Trace ids are assigned by position. The offset binning is not stored;
// the result carries a single bin covering every offset.
Survey decode_survey(std::string_view bytes);
void write_survey(const Survey& survey, const std::string& path);
Survey read_survey(const std::string& path);

std::string encode_image(const ImageGrid& image);
ImageGrid decode_image(std::string_view bytes);
void write_image(const ImageGrid& image, const std::string& path);
ImageGrid read_image(const std::string& path);

// One "tau vrms" pair per line; '#' starts a comment.
VelocityModel parse_velocity(std::string_view text);
std::string format_velocity(const VelocityModel& model);
void write_velocity(const VelocityModel& model, const std::string& path);
VelocityModel read_velocity(const std::string& path);

// Binary P5 greymap, width nx, height ntau:
// pixel = clamp(round(128 + 127 * gain * value / max|value|), 0, 255).
std::string encode_pgm(const StackedImage& image, double gain);
void export_pgm(const StackedImage& image, const std::string& path, double gain);

// Plain CSV with a header row; values printed with full precision.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace pktm
