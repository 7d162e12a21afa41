#pragma once

// Core value types: traces, acquisition geometry, RMS velocity, and the
// common-offset image volume.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace pktm {

struct TraceHeader {
  std::uint32_t trace_id = 0;
  double source_x = 0.0;    // m
  double receiver_x = 0.0;  // m
  double t0 = 0.0;          // s, time of the first sample
  double dt = 0.004;        // s
  std::uint32_t n_samples = 1;

  double offset() const;
  double midpoint() const { return 0.5 * (source_x + receiver_x); }
  // Time of the last sample.
  double t_end() const { return t0 + static_cast<double>(n_samples - 1) * dt; }

  // Throws ValidationError when dt <= 0, n_samples == 0, t0 < 0 or a
  // coordinate is not finite.
  void validate() const;

  bool operator==(const TraceHeader&) const = default;
};

struct Trace {
  TraceHeader header;
  std::vector<float> samples;

  // Zero-filled trace for `header`.
  static Trace zeros(const TraceHeader& header);

  void validate() const;
  bool operator==(const Trace&) const = default;
};

// Bin b covers [edges[b], edges[b+1]).
class OffsetBinning {
 public:
  OffsetBinning() = default;
  explicit OffsetBinning(std::vector<double> edges);

  // One bin [0, max_offset) with max_offset strictly above `largest`.
  static OffsetBinning single_bin_covering(double largest);

  std::size_t bin_count() const { return edges_.empty() ? 0 : edges_.size() - 1; }
  std::optional<std::size_t> bin_of(double offset) const;
  const std::vector<double>& edges() const { return edges_; }

  bool operator==(const OffsetBinning&) const = default;

 private:
  std::vector<double> edges_;
};

struct Survey {
  std::vector<Trace> traces;
  OffsetBinning offset_bins;

  std::vector<TraceHeader> headers() const;
  // trace_id == position, every trace valid.
  void validate() const;
};

struct VelocityKnot {
  double tau;   // s, two-way vertical time
  double vrms;  // m/s
  bool operator==(const VelocityKnot&) const = default;
};

// Laterally invariant v_rms(tau): piecewise linear between knots, constant
// beyond the end knots.
class VelocityModel {
 public:
  explicit VelocityModel(std::vector<VelocityKnot> knots);
  static VelocityModel constant(double vrms);

  double at(double tau) const;
  const std::vector<VelocityKnot>& knots() const { return knots_; }
  bool is_constant() const { return knots_.size() == 1; }

  bool operator==(const VelocityModel&) const = default;

 private:
  std::vector<VelocityKnot> knots_;
};

struct CellKey {
  std::uint32_t b = 0;
  std::uint32_t ix = 0;
  std::uint32_t itau = 0;

  auto operator<=>(const CellKey&) const = default;
};

struct Contribution {
  CellKey key;
  double value = 0.0;
  bool operator==(const Contribution&) const = default;
};

// Image geometry without values.
struct GridGeometry {
  double x_min = 0.0;
  double dx = 1.0;
  std::uint32_t nx = 1;
  double tau_min = 0.0;
  double dtau = 0.004;
  std::uint32_t ntau = 1;
  std::uint32_t n_offset_bins = 1;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(n_offset_bins) * nx * ntau;
  }
  double x_at(std::uint32_t ix) const { return x_min + ix * dx; }
  double tau_at(std::uint32_t itau) const { return tau_min + itau * dtau; }
  bool contains(const CellKey& key) const {
    return key.b < n_offset_bins && key.ix < nx && key.itau < ntau;
  }
  void validate() const;

  bool operator==(const GridGeometry&) const = default;
};

// Common-offset image volume I(b, ix, itau), stored b-major then ix then itau.
class ImageGrid {
 public:
  ImageGrid() = default;
  explicit ImageGrid(const GridGeometry& geometry);

  const GridGeometry& geometry() const { return geometry_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& at(const CellKey& key);
  double at(const CellKey& key) const;

  bool operator==(const ImageGrid&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

// Offset-stacked 2-D image (nx x ntau, ix-major).
struct StackedImage {
  std::uint32_t nx = 0;
  std::uint32_t ntau = 0;
  std::vector<double> values;

  double at(std::uint32_t ix, std::uint32_t itau) const {
    return values[static_cast<std::size_t>(ix) * ntau + itau];
  }
  bool operator==(const StackedImage&) const = default;
};

// Canonical encoding (b * nx + ix) * ntau + itau. Throws BoundsError for
// keys outside the grid.
std::uint64_t cell_key_ordinal(const CellKey& key, const GridGeometry& grid);
CellKey cell_key_from_ordinal(std::uint64_t ordinal, const GridGeometry& grid);

struct FlopEstimate {
  std::uint64_t flops = 0;
  double gflop_years = 0.0;
};

inline constexpr double kSecondsPerYear = 365.25 * 86400.0;

// f_k * n_image_points * n_traces operations, expressed also as years on a
// 1 Gflop/s machine. Throws OverflowError if the product exceeds 64 bits.
FlopEstimate estimate_flops(std::uint64_t n_image_points, std::uint64_t n_traces,
                            std::uint64_t f_k);

}  // namespace pktm
