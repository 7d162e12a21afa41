#include "pktm/storage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "byteio.hpp"
#include "pktm/errors.hpp"

namespace pktm {

namespace {

constexpr std::string_view kSurveyMagic = "SMR1";
constexpr std::string_view kImageMagic = "SMI1";
constexpr std::size_t kTraceHeaderBytes = 4 * 8 + 4;

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string encode_survey(const Survey& survey) {
  detail::ByteWriter w;
  w.bytes(kSurveyMagic);
  w.u32(static_cast<std::uint32_t>(survey.traces.size()));
  for (const auto& tr : survey.traces) {
    tr.validate();
    const auto& h = tr.header;
    w.f64(h.source_x);
    w.f64(h.receiver_x);
    w.f64(h.t0);
    w.f64(h.dt);
    w.u32(h.n_samples);
    for (float s : tr.samples) w.f32(s);
  }
  return w.take();
}

Survey decode_survey(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 || r.bytes(4) != kSurveyMagic) throw FormatError("bad survey magic", 0);
  const std::uint32_t count = r.u32();
  if (static_cast<std::uint64_t>(count) * kTraceHeaderBytes > r.remaining())
    throw TruncationError("survey declares " + std::to_string(count) + " traces", r.offset());

  Survey survey;
  survey.traces.reserve(count);
  double max_offset = 0.0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    Trace tr;
    tr.header.trace_id = i;
    tr.header.source_x = r.f64();
    tr.header.receiver_x = r.f64();
    tr.header.t0 = r.f64();
    tr.header.dt = r.f64();
    tr.header.n_samples = r.u32();
    try {
      tr.header.validate();
    } catch (const ValidationError& e) {
      throw CorruptionError(e.what(), at);
    }
    if (static_cast<std::uint64_t>(tr.header.n_samples) * 4 > r.remaining())
      throw TruncationError("trace " + std::to_string(i) + " declares " +
                                std::to_string(tr.header.n_samples) + " samples",
                            r.offset());
    tr.samples.resize(tr.header.n_samples);
    for (auto& s : tr.samples) {
      s = r.f32();
      if (!std::isfinite(s)) throw CorruptionError("non-finite sample", r.offset() - 4);
    }
    max_offset = std::max(max_offset, tr.header.offset());
    survey.traces.push_back(std::move(tr));
  }
  if (r.remaining() != 0)
    throw CorruptionError(std::to_string(r.remaining()) + " trailing bytes after last trace",
                          r.offset());
  survey.offset_bins = OffsetBinning::single_bin_covering(max_offset);
  return survey;
}

void write_survey(const Survey& survey, const std::string& path) {
  detail::write_file_atomic(path, encode_survey(survey));
}

Survey read_survey(const std::string& path) { return decode_survey(detail::read_file(path)); }

std::string encode_image(const ImageGrid& image) {
  const auto& g = image.geometry();
  detail::ByteWriter w;
  w.bytes(kImageMagic);
  w.f64(g.x_min);
  w.f64(g.dx);
  w.f64(g.tau_min);
  w.f64(g.dtau);
  w.u32(g.nx);
  w.u32(g.ntau);
  w.u32(g.n_offset_bins);
  for (double v : image.values()) w.f64(v);
  return w.take();
}

ImageGrid decode_image(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 || r.bytes(4) != kImageMagic) throw FormatError("bad image magic", 0);
  GridGeometry g;
  g.x_min = r.f64();
  g.dx = r.f64();
  g.tau_min = r.f64();
  g.dtau = r.f64();
  g.nx = r.u32();
  g.ntau = r.u32();
  g.n_offset_bins = r.u32();
  try {
    g.validate();
  } catch (const ValidationError& e) {
    throw CorruptionError(e.what(), 4);
  }
  std::uint64_t count = 0;
  if (__builtin_mul_overflow(static_cast<std::uint64_t>(g.nx) * g.ntau,
                             std::uint64_t{g.n_offset_bins}, &count) ||
      count > r.remaining() / 8)
    throw TruncationError("image declares " + std::to_string(g.nx) + "x" + std::to_string(g.ntau) +
                              "x" + std::to_string(g.n_offset_bins) + " values",
                          r.offset());
  const std::uint64_t need = count * 8;
  if (need < r.remaining())
    throw CorruptionError(std::to_string(r.remaining() - need) + " trailing bytes", r.offset() + need);
  ImageGrid image(g);
  for (auto& v : image.values()) {
    v = r.f64();
    if (!std::isfinite(v)) throw CorruptionError("non-finite image value", r.offset() - 8);
  }
  return image;
}

void write_image(const ImageGrid& image, const std::string& path) {
  detail::write_file_atomic(path, encode_image(image));
}

ImageGrid read_image(const std::string& path) { return decode_image(detail::read_file(path)); }

VelocityModel parse_velocity(std::string_view text) {
  std::vector<VelocityKnot> knots;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) throw ParseError("expected 'tau vrms', got " + std::to_string(tokens.size()) + " tokens", line_no);
    double vals[2];
    for (int i = 0; i < 2; ++i) {
      char* stop = nullptr;
      vals[i] = std::strtod(tokens[i].c_str(), &stop);
      if (stop == tokens[i].c_str() || *stop != '\0')
        throw ParseError("not a number: '" + tokens[i] + "'", line_no);
    }
    knots.push_back({vals[0], vals[1]});
  }
  return VelocityModel(std::move(knots));
}

std::string format_velocity(const VelocityModel& model) {
  std::string out = "# tau_s vrms_m_per_s\n";
  for (const auto& k : model.knots()) out += full(k.tau) + " " + full(k.vrms) + "\n";
  return out;
}

void write_velocity(const VelocityModel& model, const std::string& path) {
  detail::write_file_atomic(path, format_velocity(model));
}

VelocityModel read_velocity(const std::string& path) {
  return parse_velocity(detail::read_file(path));
}

std::string encode_pgm(const StackedImage& image, double gain) {
  if (!(gain > 0.0)) throw DomainError("gain must be > 0");
  double max_abs = 0.0;
  for (double v : image.values) max_abs = std::max(max_abs, std::fabs(v));
  std::string out = "P5\n" + std::to_string(image.nx) + " " + std::to_string(image.ntau) + "\n255\n";
  out.reserve(out.size() + image.values.size());
  for (std::uint32_t it = 0; it < image.ntau; ++it) {
    for (std::uint32_t ix = 0; ix < image.nx; ++ix) {
      long pixel = 128;
      if (max_abs > 0.0)
        pixel = std::lround(128.0 + 127.0 * gain * image.at(ix, it) / max_abs);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(pixel, 0L, 255L))));
    }
  }
  return out;
}

void export_pgm(const StackedImage& image, const std::string& path, double gain) {
  detail::write_file_atomic(path, encode_pgm(image, gain));
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + full(row[i]);
    out += "\n";
  }
  detail::write_file_atomic(path, out);
}

}  // namespace pktm
