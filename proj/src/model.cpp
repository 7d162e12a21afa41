#include "pktm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pktm/errors.hpp"

namespace pktm {

double TraceHeader::offset() const { return std::fabs(source_x - receiver_x); }

void TraceHeader::validate() const {
  if (!std::isfinite(source_x) || !std::isfinite(receiver_x))
    throw ValidationError("trace " + std::to_string(trace_id) + ": non-finite coordinate");
  if (!std::isfinite(dt) || dt <= 0.0)
    throw ValidationError("trace " + std::to_string(trace_id) + ": dt must be > 0");
  if (!std::isfinite(t0) || t0 < 0.0)
    throw ValidationError("trace " + std::to_string(trace_id) + ": t0 must be >= 0");
  if (n_samples == 0)
    throw ValidationError("trace " + std::to_string(trace_id) + ": n_samples must be >= 1");
}

Trace Trace::zeros(const TraceHeader& header) {
  return Trace{header, std::vector<float>(header.n_samples, 0.0f)};
}

void Trace::validate() const {
  header.validate();
  if (samples.size() != header.n_samples)
    throw ValidationError("trace " + std::to_string(header.trace_id) + ": has " +
                          std::to_string(samples.size()) + " samples, header says " +
                          std::to_string(header.n_samples));
  for (float s : samples)
    if (!std::isfinite(s))
      throw ValidationError("trace " + std::to_string(header.trace_id) +
                            ": non-finite sample");
}

OffsetBinning::OffsetBinning(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) throw ValidationError("offset binning needs at least two edges");
  if (!(edges_.front() >= 0.0)) throw ValidationError("first offset edge must be >= 0");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (!(edges_[i] > edges_[i - 1]) || !std::isfinite(edges_[i]))
      throw ValidationError("offset edges must be finite and strictly increasing");
}

OffsetBinning OffsetBinning::single_bin_covering(double largest) {
  return OffsetBinning({0.0, 2.0 * std::max(largest, 0.0) + 1.0});
}

std::optional<std::size_t> OffsetBinning::bin_of(double offset) const {
  if (edges_.size() < 2 || !(offset >= edges_.front()) || !(offset < edges_.back()))
    return std::nullopt;
  auto it = std::upper_bound(edges_.begin(), edges_.end(), offset);
  return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

std::vector<TraceHeader> Survey::headers() const {
  std::vector<TraceHeader> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(t.header);
  return out;
}

void Survey::validate() const {
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].header.trace_id != i)
      throw ValidationError("trace at position " + std::to_string(i) + " has trace_id " +
                            std::to_string(traces[i].header.trace_id));
    traces[i].validate();
  }
}

VelocityModel::VelocityModel(std::vector<VelocityKnot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw ValidationError("velocity model needs at least one knot");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].vrms) || knots_[i].vrms <= 0.0)
      throw ValidationError("velocity must be finite and > 0");
    if (!std::isfinite(knots_[i].tau))
      throw ValidationError("knot time must be finite");
    if (i > 0 && !(knots_[i].tau > knots_[i - 1].tau))
      throw ValidationError("knot times must be strictly increasing");
  }
}

VelocityModel VelocityModel::constant(double vrms) { return VelocityModel({{0.0, vrms}}); }

double VelocityModel::at(double tau) const {
  if (tau <= knots_.front().tau) return knots_.front().vrms;
  if (tau >= knots_.back().tau) return knots_.back().vrms;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), tau,
                             [](double t, const VelocityKnot& k) { return t < k.tau; });
  auto lo = hi - 1;
  double w = (tau - lo->tau) / (hi->tau - lo->tau);
  return lo->vrms + w * (hi->vrms - lo->vrms);
}

void GridGeometry::validate() const {
  if (!std::isfinite(x_min)) throw ValidationError("grid x_min must be finite");
  if (!std::isfinite(dx) || dx <= 0.0) throw ValidationError("grid dx must be > 0");
  if (!std::isfinite(tau_min) || tau_min < 0.0)
    throw ValidationError("grid tau_min must be >= 0");
  if (!std::isfinite(dtau) || dtau <= 0.0) throw ValidationError("grid dtau must be > 0");
  if (nx == 0 || ntau == 0 || n_offset_bins == 0)
    throw ValidationError("grid dimensions must be >= 1");
}

ImageGrid::ImageGrid(const GridGeometry& geometry)
    : geometry_(geometry), values_((geometry.validate(), geometry.cell_count()), 0.0) {}

double& ImageGrid::at(const CellKey& key) {
  return values_[cell_key_ordinal(key, geometry_)];
}

double ImageGrid::at(const CellKey& key) const {
  return values_[cell_key_ordinal(key, geometry_)];
}

std::uint64_t cell_key_ordinal(const CellKey& key, const GridGeometry& grid) {
  if (!grid.contains(key))
    throw BoundsError("cell (" + std::to_string(key.b) + ", " + std::to_string(key.ix) + ", " +
                      std::to_string(key.itau) + ") outside grid");
  return (static_cast<std::uint64_t>(key.b) * grid.nx + key.ix) * grid.ntau + key.itau;
}

CellKey cell_key_from_ordinal(std::uint64_t ordinal, const GridGeometry& grid) {
  if (ordinal >= grid.cell_count())
    throw BoundsError("ordinal " + std::to_string(ordinal) + " outside grid");
  CellKey key;
  key.itau = static_cast<std::uint32_t>(ordinal % grid.ntau);
  ordinal /= grid.ntau;
  key.ix = static_cast<std::uint32_t>(ordinal % grid.nx);
  key.b = static_cast<std::uint32_t>(ordinal / grid.nx);
  return key;
}

FlopEstimate estimate_flops(std::uint64_t n_image_points, std::uint64_t n_traces,
                            std::uint64_t f_k) {
  if (n_image_points == 0 || n_traces == 0 || f_k == 0) return {};
  std::uint64_t partial = 0;
  std::uint64_t flops = 0;
  if (__builtin_mul_overflow(n_image_points, n_traces, &partial) ||
      __builtin_mul_overflow(partial, f_k, &flops))
    throw OverflowError("flop count exceeds 2^64");
  return {flops, static_cast<double>(flops) / (1e9 * kSecondsPerYear)};
}

}  // namespace pktm
