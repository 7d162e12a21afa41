#include "pktm/distributed.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>

#include "byteio.hpp"
#include "pktm/errors.hpp"
#include "pktm/storage.hpp"

namespace pktm {

std::vector<Contribution> combine(std::span<const Contribution> contribs) {
  return mr::combine_by(contribs, [](const Contribution& c) { return c.key; });
}

std::uint32_t partition_of(const CellKey& key, const GridGeometry& grid,
                           std::uint32_t n_partitions) {
  return mr::partition_of(cell_key_ordinal(key, grid), n_partitions);
}

ImageGrid reassemble_image(std::span<const std::pair<CellKey, double>> reduced,
                           const GridGeometry& grid) {
  ImageGrid image(grid);
  for (std::size_t i = 0; i < reduced.size(); ++i) {
    if (i > 0 && !(reduced[i - 1].first < reduced[i].first))
      throw ContractError("reduced keys must be strictly ascending (position " +
                          std::to_string(i) + ")");
    image.at(reduced[i].first) = reduced[i].second;
  }
  return image;
}

ImageGrid reassemble_image(std::span<const mr::KeyValue> reduced, const GridGeometry& grid) {
  ImageGrid image(grid);
  auto values = image.values();
  for (std::size_t i = 0; i < reduced.size(); ++i) {
    if (i > 0 && !(reduced[i - 1].key < reduced[i].key))
      throw ContractError("reduced keys must be strictly ascending (position " +
                          std::to_string(i) + ")");
    if (reduced[i].key >= values.size())
      throw BoundsError("ordinal " + std::to_string(reduced[i].key) + " outside grid");
    values[reduced[i].key] = reduced[i].value;
  }
  return image;
}

mr::MapInput migration_map_input(const Survey& survey, const MigrationJob& job) {
  job.validate();
  mr::MapInput input;
  input.n_records = survey.traces.size();
  input.map = [&survey, job](std::size_t record, mr::Emitter& out) {
    for (const auto& c : migrate_trace(survey.traces[record], job))
      out.emit(cell_key_ordinal(c.key, job.grid), c.value);
  };
  return input;
}

ImageGrid migrate_survey_mapreduce(const Survey& survey, const MigrationJob& job,
                                   const mr::JobConfig& config, const std::string& survey_path,
                                   mr::JobStats* stats) {
  mr::MapInput input = migration_map_input(survey, job);
  std::string manifest_dir;
  if (!survey_path.empty() && config.mode == mr::Mode::multiprocess) {
    manifest_dir = mr::make_job_spill_dir(config);
    input.manifest = manifest_dir + "/job.manifest";
    write_migration_manifest(input.manifest, std::filesystem::absolute(survey_path).string(), job);
  }
  mr::JobResult result;
  try {
    result = mr::run_job(input, config);
  } catch (...) {
    if (!manifest_dir.empty()) std::filesystem::remove_all(manifest_dir);
    throw;
  }
  if (!manifest_dir.empty()) std::filesystem::remove_all(manifest_dir);
  if (stats) *stats = result.stats;
  return reassemble_image(std::span<const mr::KeyValue>(result.pairs), job.grid);
}

namespace {

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + full(v[i]);
  return out;
}

std::vector<double> split_numbers(const std::string& text, char sep, std::size_t line) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, sep);) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0') throw ParseError("not a number: '" + tok + "'", line);
    out.push_back(v);
  }
  return out;
}

}  // namespace

void write_migration_manifest(const std::string& path, const std::string& survey_path,
                              const MigrationJob& job) {
  const auto& g = job.grid;
  std::vector<double> vel;
  for (const auto& k : job.vel.knots()) {
    vel.push_back(k.tau);
    vel.push_back(k.vrms);
  }
  std::ostringstream out;
  out << "kind=pktm-migrate\n"
      << "survey=" << survey_path << "\n"
      << "x_min=" << full(g.x_min) << "\n"
      << "dx=" << full(g.dx) << "\n"
      << "nx=" << g.nx << "\n"
      << "tau_min=" << full(g.tau_min) << "\n"
      << "dtau=" << full(g.dtau) << "\n"
      << "ntau=" << g.ntau << "\n"
      << "offset_edges=" << join(job.binning.edges(), ',') << "\n"
      << "velocity=" << join(vel, ',') << "\n"
      << "aperture=" << full(job.params.aperture) << "\n"
      << "weight=" << (job.params.weight_mode == WeightMode::unit ? "unit" : "obliquity") << "\n";
  detail::write_file_atomic(path, out.str());
}

std::pair<std::string, MigrationJob> read_migration_manifest(const std::string& path) {
  const std::string text = detail::read_file(path);
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::stringstream ss(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    kv[line.substr(0, eq)] = {line.substr(eq + 1), line_no};
  }
  auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("manifest '" + path + "' lacks '" + key + "'", line_no);
    return it->second;
  };
  auto num = [&](const std::string& key) {
    const auto& [v, line] = get(key);
    const auto vals = split_numbers(v, ',', line);
    if (vals.size() != 1) throw ParseError("'" + key + "' needs one number", line);
    return vals[0];
  };
  if (get("kind").first != "pktm-migrate")
    throw ParseError("unknown manifest kind '" + get("kind").first + "'", get("kind").second);

  MigrationJob job;
  job.grid.x_min = num("x_min");
  job.grid.dx = num("dx");
  job.grid.nx = static_cast<std::uint32_t>(num("nx"));
  job.grid.tau_min = num("tau_min");
  job.grid.dtau = num("dtau");
  job.grid.ntau = static_cast<std::uint32_t>(num("ntau"));
  job.binning = OffsetBinning(split_numbers(get("offset_edges").first, ',', get("offset_edges").second));
  job.grid.n_offset_bins = static_cast<std::uint32_t>(job.binning.bin_count());
  const auto vel = split_numbers(get("velocity").first, ',', get("velocity").second);
  if (vel.empty() || vel.size() % 2 != 0)
    throw ParseError("velocity needs tau,vrms pairs", get("velocity").second);
  std::vector<VelocityKnot> knots;
  for (std::size_t i = 0; i < vel.size(); i += 2) knots.push_back({vel[i], vel[i + 1]});
  job.vel = VelocityModel(std::move(knots));
  job.params.aperture = num("aperture");
  const auto& w = get("weight");
  if (w.first == "unit") {
    job.params.weight_mode = WeightMode::unit;
  } else if (w.first == "obliquity") {
    job.params.weight_mode = WeightMode::obliquity;
  } else {
    throw ParseError("unknown weight '" + w.first + "'", w.second);
  }
  job.validate();
  return {get("survey").first, job};
}

mr::MapInput resolve_migration_manifest(const std::string& manifest_path) {
  auto [survey_path, job] = read_migration_manifest(manifest_path);
  auto survey = std::make_shared<const Survey>(read_survey(survey_path));
  mr::MapInput input;
  input.n_records = survey->traces.size();
  input.manifest = manifest_path;
  input.map = [survey, job = std::move(job)](std::size_t record, mr::Emitter& out) {
    for (const auto& c : migrate_trace(survey->traces[record], job))
      out.emit(cell_key_ordinal(c.key, job.grid), c.value);
  };
  return input;
}

}  // namespace pktm
