#include "pktm/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "pktm/distributed.hpp"
#include "pktm/errors.hpp"
#include "pktm/kirchhoff.hpp"
#include "pktm/selftest.hpp"
#include "pktm/storage.hpp"
#include "pktm/synthetics.hpp"
#include "pktm/velocity_analysis.hpp"

namespace pktm::cli {

namespace {

// Thrown for bad flag values that CLI11 cannot check on its own.
struct UsageError : Error {
  using Error::Error;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0')
      throw UsageError(flag + ": '" + tok + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

struct GridOpts {
  double x_min = 0.0;
  double dx = 25.0;
  std::uint32_t nx = 41;
  double tau_min = 0.0;
  double dtau = 0.004;
  std::uint32_t ntau = 401;
  std::string offset_edges = "0,250,500,750,1000";

  void add(CLI::App* app) {
    app->add_option("--x-min", x_min, "first image x (m)")->capture_default_str();
    app->add_option("--dx", dx, "image x spacing (m)")->capture_default_str();
    app->add_option("--nx", nx, "image x count")->capture_default_str();
    app->add_option("--tau-min", tau_min, "first image two-way time (s)")->capture_default_str();
    app->add_option("--dtau", dtau, "image time spacing (s)")->capture_default_str();
    app->add_option("--ntau", ntau, "image time count")->capture_default_str();
    app->add_option("--offset-edges", offset_edges, "comma-separated offset bin edges (m)")
        ->capture_default_str();
  }
};

struct VelOpts {
  std::string file;
  double vconst = 2000.0;

  void add(CLI::App* app) {
    app->add_option("--velocity", file, "velocity file, lines 'tau_s vrms_m/s' (overrides --vconst)");
    app->add_option("--vconst", vconst, "constant RMS velocity (m/s)")->capture_default_str();
  }
  VelocityModel model() const {
    if (!file.empty()) return read_velocity(file);
    return VelocityModel::constant(vconst);
  }
};

struct KernelOpts {
  double aperture = 2000.0;
  std::string weight = "unit";

  void add(CLI::App* app) {
    app->add_option("--aperture", aperture, "half-width around trace midpoint (m)")
        ->capture_default_str();
    app->add_option("--weight", weight, "amplitude weight: unit|obliquity")
        ->check(CLI::IsMember({"unit", "obliquity"}))
        ->capture_default_str();
  }
  KernelParams params() const {
    KernelParams p;
    p.aperture = aperture;
    p.weight_mode = weight == "obliquity" ? WeightMode::obliquity : WeightMode::unit;
    return p;
  }
};

struct ExecOpts {
  std::string mode = "serial";
  std::uint32_t workers = 2;
  std::uint32_t partitions = 4;
  std::size_t chunk = kDefaultChunkSize;
  bool combiner = true;
  std::string spill_dir;
  std::string listen = "127.0.0.1:0";
  int spawn_workers = -1;
  double task_timeout = 60.0;
  std::uint32_t max_retries = 3;
  int kill_after_first_done = -1;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "execution: reference|serial|threaded|multiprocess")
        ->check(CLI::IsMember({"reference", "serial", "threaded", "multiprocess"}))
        ->capture_default_str();
    app->add_option("--workers", workers, "threads (threaded) or worker processes (multiprocess)")
        ->capture_default_str();
    app->add_option("--partitions", partitions, "reduce partitions")->capture_default_str();
    app->add_option("--chunk-size", chunk, "traces per map task")->capture_default_str();
    app->add_option("--combiner", combiner, "map-side combiner: true|false")->capture_default_str();
    app->add_option("--spill-dir", spill_dir,
                    std::string("spill directory (env ") + mr::kSpillDirEnv + " overrides)");
    app->add_option("--listen", listen, "coordinator address host:port (multiprocess)")
        ->capture_default_str();
    app->add_option("--spawn-workers", spawn_workers,
                    "worker processes to fork; 0 waits for `pktm worker` (default: --workers)")
        ->capture_default_str();
    app->add_option("--task-timeout", task_timeout, "seconds before a task is reassigned")
        ->capture_default_str();
    app->add_option("--max-retries", max_retries, "retries per task before the job fails")
        ->capture_default_str();
    app->add_option("--inject-worker-kill", kill_after_first_done,
                    "fault injection: SIGKILL worker N after its first completed task (-1 off)")
        ->capture_default_str();
  }

  mr::JobConfig config() const {
    mr::JobConfig c;
    c.mode = mode == "threaded"       ? mr::Mode::threaded
             : mode == "multiprocess" ? mr::Mode::multiprocess
                                      : mr::Mode::serial;
    c.n_workers = workers;
    if (c.mode == mr::Mode::multiprocess && spawn_workers >= 0) {
      c.spawn_workers = spawn_workers > 0;
      if (spawn_workers > 0) c.n_workers = static_cast<std::uint32_t>(spawn_workers);
    }
    c.n_partitions = partitions;
    c.chunk_size = chunk;
    c.combiner_enabled = combiner;
    c.spill_dir = spill_dir;
    c.listen = listen;
    c.task_timeout = task_timeout;
    c.max_task_retries = max_retries;
    c.fault.kill_worker_after_first_done = kill_after_first_done;
    c.on_listening = [](const std::string& ep) { std::cerr << "coordinator listening on " << ep << "\n"; };
    return c;
  }

  Migrator migrator(const std::string& survey_path) const {
    if (mode == "reference") return serial_migrator(chunk);
    const mr::JobConfig cfg = config();
    return [cfg, survey_path](const Survey& survey, const MigrationJob& job) {
      mr::JobStats stats;
      ImageGrid image = migrate_survey_mapreduce(survey, job, cfg, survey_path, &stats);
      if (!stats.keys_strictly_ascending) throw JobError("reduce output not strictly ascending");
      return image;
    };
  }
};

MigrationJob make_job(const GridOpts& g, const VelocityModel& vel, const KernelOpts& k) {
  MigrationJob job;
  job.binning = OffsetBinning(parse_list(g.offset_edges, "--offset-edges"));
  job.grid = {g.x_min, g.dx, g.nx, g.tau_min, g.dtau, g.ntau,
              static_cast<std::uint32_t>(job.binning.bin_count())};
  job.grid.validate();
  job.vel = vel;
  job.params = k.params();
  job.params.validate();
  return job;
}

std::uint64_t as_count(double v, const std::string& flag) {
  if (!(v >= 0.0) || v != std::floor(v) || v >= 18446744073709551616.0)
    throw ValidationError(flag + " must be a non-negative integer below 2^64");
  return static_cast<std::uint64_t>(v);
}

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path))
    throw IoError("input file '" + path + "' does not exist");
}

// `--config FILE` holds key=value lines; each key is a long flag name of the
// active subcommand. Flags present on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (config_path.empty()) return out;

  std::set<std::string> given;
  for (const auto& a : out)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));

  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config file '" + config_path + "'");
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key=value", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (given.count(key)) continue;
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

void print_scan(const ScanResult& scan) {
  std::printf("%12s %24s\n", "vrms_m/s", "focus_metric");
  for (std::size_t i = 0; i < scan.candidates.size(); ++i)
    std::printf("%12.3f %24.17g%s\n", scan.candidates[i].vrms, scan.candidates[i].focus_metric,
                i == scan.best ? "  <- best" : "");
}

std::vector<std::vector<double>> scan_rows(const ScanResult& scan) {
  std::vector<std::vector<double>> rows;
  for (const auto& c : scan.candidates) rows.push_back({c.vrms, c.focus_metric});
  return rows;
}

}  // namespace

int run(const std::vector<std::string>& raw_args) {
  CLI::App app{"Prestack Kirchhoff time migration on a deterministic map-reduce runtime", "pktm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  app.add_option("--config", "key=value file of flag defaults for the subcommand");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic point-diffractor survey");
  Acquisition acq{20, 0.0, 50.0, 20, 0.0, 50.0, 501, 0.004};
  std::string synth_out;
  std::vector<std::string> scatterer_specs;
  std::vector<std::string> reflector_specs;
  double freq = 25.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
  VelOpts synth_vel;
  std::string synth_edges = "0,250,500,750,1000";
  synth->add_option("--out", synth_out, "output survey file (SMR1)")->required();
  synth->add_option("--sources", acq.k_sources, "source count K")->capture_default_str();
  synth->add_option("--source-x0", acq.source_x0, "first source x (m)")->capture_default_str();
  synth->add_option("--source-dx", acq.source_dx, "source spacing (m)")->capture_default_str();
  synth->add_option("--receivers", acq.l_receivers, "receiver count L")->capture_default_str();
  synth->add_option("--recv-x0", acq.recv_x0, "first receiver x (m)")->capture_default_str();
  synth->add_option("--recv-dx", acq.recv_dx, "receiver spacing (m)")->capture_default_str();
  synth->add_option("--nsamples", acq.n_samples, "samples per trace")->capture_default_str();
  synth->add_option("--dt", acq.dt, "sample interval (s)")->capture_default_str();
  synth->add_option("--scatterer", scatterer_specs, "point diffractor 'x_m,tau_s,amplitude' (repeatable)");
  synth->add_option("--reflector", reflector_specs,
                    "flat reflector 'tau_s,x0_m,x1_m,spacing_m,amplitude' (repeatable)");
  synth->add_option("--freq", freq, "Ricker peak frequency (Hz)")->capture_default_str();
  synth->add_option("--noise", noise, "additive white noise standard deviation")->capture_default_str();
  synth->add_option("--seed", seed, "noise seed")->capture_default_str();
  synth->add_option("--offset-edges", synth_edges, "offset bin edges recorded with the survey (m)")
      ->capture_default_str();
  synth_vel.add(synth);

  // migrate
  auto* migrate = app.add_subcommand("migrate", "migrate a survey into a common-offset image");
  std::string mig_in, mig_out, mig_pgm;
  double gain = 1.0;
  GridOpts mig_grid;
  VelOpts mig_vel;
  KernelOpts mig_kernel;
  ExecOpts mig_exec;
  migrate->add_option("--in", mig_in, "input survey (SMR1)")->required();
  migrate->add_option("--out", mig_out, "output image (SMI1)")->required();
  migrate->add_option("--pgm", mig_pgm, "also write the stacked image as PGM");
  migrate->add_option("--gain", gain, "PGM display gain")->capture_default_str();
  mig_grid.add(migrate);
  mig_vel.add(migrate);
  mig_kernel.add(migrate);
  mig_exec.add(migrate);

  // demig
  auto* demig = app.add_subcommand("demig", "forward-model traces from an image (adjoint of migrate)");
  std::string demig_image, demig_geometry, demig_out, demig_edges = "0,250,500,750,1000";
  VelOpts demig_vel;
  KernelOpts demig_kernel;
  demig->add_option("--image", demig_image, "input image (SMI1)")->required();
  demig->add_option("--geometry", demig_geometry, "survey whose trace headers are modeled (SMR1)")->required();
  demig->add_option("--out", demig_out, "output survey (SMR1)")->required();
  demig->add_option("--offset-edges", demig_edges, "offset bin edges matching the image (m)")
      ->capture_default_str();
  demig_vel.add(demig);
  demig_kernel.add(demig);

  // scan
  auto* scan = app.add_subcommand("scan", "constant-velocity scan scored by stacked energy");
  std::string scan_in, scan_out, scan_candidates = "1800,1900,2000,2100,2200";
  GridOpts scan_grid;
  KernelOpts scan_kernel;
  ExecOpts scan_exec;
  scan->add_option("--in", scan_in, "input survey (SMR1)")->required();
  scan->add_option("--candidates", scan_candidates, "comma-separated velocities (m/s), increasing")
      ->capture_default_str();
  scan->add_option("--out", scan_out, "CSV report (vrms, focus_metric)");
  scan_grid.add(scan);
  scan_kernel.add(scan);
  scan_exec.add(scan);

  // loop
  auto* loop = app.add_subcommand("loop", "iterate migrate / residual moveout / velocity update");
  std::string loop_in, loop_out, loop_report, loop_pgm, loop_candidates = "1800,1900,2000,2100,2200";
  LoopParams loop_params;
  GridOpts loop_grid;
  VelOpts loop_vel;
  KernelOpts loop_kernel;
  ExecOpts loop_exec;
  loop->add_option("--in", loop_in, "input survey (SMR1)")->required();
  loop->add_option("--candidates", loop_candidates, "scan velocities (m/s), increasing")->capture_default_str();
  loop->add_option("--max-iterations", loop_params.max_iterations, "iteration cap")->capture_default_str();
  loop->add_option("--rmo-tolerance", loop_params.rmo_tolerance, "stop when all lags <= this (samples)")
      ->capture_default_str();
  loop->add_option("--max-shift", loop_params.max_shift, "residual moveout search range (samples)")
      ->capture_default_str();
  loop->add_option("--out", loop_out, "final stacked image as SMI1 (one offset bin)");
  loop->add_option("--report", loop_report, "CSV (iteration, vrms, max_abs_lag)");
  loop->add_option("--pgm", loop_pgm, "final stacked image as PGM");
  loop_grid.add(loop);
  loop_vel.add(loop);
  loop_kernel.add(loop);
  loop_exec.add(loop);

  // adjoint-test
  auto* adj = app.add_subcommand("adjoint-test", "dot-product test of migrate against demig");
  std::uint64_t adj_seed = 1;
  std::uint32_t adj_nx = 48, adj_ntau = 48, adj_traces = 50;
  double adj_tol = 1e-10;
  adj->add_option("--seed", adj_seed, "random seed")->capture_default_str();
  adj->add_option("--nx", adj_nx, "image x count")->capture_default_str();
  adj->add_option("--ntau", adj_ntau, "image time count")->capture_default_str();
  adj->add_option("--traces", adj_traces, "random traces")->capture_default_str();
  adj->add_option("--tolerance", adj_tol, "maximum relative error")->capture_default_str();

  // estimate
  auto* est = app.add_subcommand("estimate", "Kirchhoff cost estimate f_k * N_xyz * N_tr");
  double nxyz = 0, ntraces = 0, fk = 10;
  est->add_option("--nxyz", nxyz, "image points")->required();
  est->add_option("--ntraces", ntraces, "traces contributing to each image point")->required();
  est->add_option("--fk", fk, "operations per image point per trace")->capture_default_str();

  // worker
  auto* worker = app.add_subcommand("worker", "serve map/reduce tasks for a coordinator");
  std::string connect;
  worker->add_option("--connect", connect, "coordinator address host:port")->required();

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*synth) {
      std::vector<Scatterer> scatterers;
      for (const auto& s : scatterer_specs) {
        const auto v = parse_list(s, "--scatterer");
        if (v.size() != 3) throw UsageError("--scatterer needs x,tau,amplitude");
        scatterers.push_back({v[0], v[1], v[2]});
      }
      for (const auto& s : reflector_specs) {
        const auto v = parse_list(s, "--reflector");
        if (v.size() != 5) throw UsageError("--reflector needs tau,x0,x1,spacing,amplitude");
        for (const auto& sc : flat_reflector(v[0], v[1], v[2], v[3], v[4])) scatterers.push_back(sc);
      }
      const auto headers = make_acquisition(acq);
      const auto survey = synth_survey(headers, scatterers, synth_vel.model(), Wavelet{freq},
                                       OffsetBinning(parse_list(synth_edges, "--offset-edges")),
                                       SynthOptions{noise, seed});
      write_survey(survey, synth_out);
      std::printf("wrote %zu traces (%u sources x %u receivers) to %s\n", survey.traces.size(),
                  acq.k_sources, acq.l_receivers, synth_out.c_str());
    } else if (*migrate) {
      require_file(mig_in);
      const MigrationJob job = make_job(mig_grid, mig_vel.model(), mig_kernel);
      const Survey survey = read_survey(mig_in);
      const ImageGrid image = mig_exec.migrator(mig_in)(survey, job);
      write_image(image, mig_out);
      if (!mig_pgm.empty()) export_pgm(stack_offsets(image), mig_pgm, gain);
      std::printf("migrated %zu traces (%s) into %ux%ux%u image %s\n", survey.traces.size(),
                  mig_exec.mode.c_str(), job.grid.n_offset_bins, job.grid.nx, job.grid.ntau,
                  mig_out.c_str());
    } else if (*demig) {
      require_file(demig_image);
      require_file(demig_geometry);
      const ImageGrid image = read_image(demig_image);
      const Survey geometry = read_survey(demig_geometry);
      MigrationJob job;
      job.grid = image.geometry();
      job.binning = OffsetBinning(parse_list(demig_edges, "--offset-edges"));
      job.vel = demig_vel.model();
      job.params = demig_kernel.params();
      Survey out;
      out.offset_bins = job.binning;
      out.traces = forward_model(image, geometry.headers(), job);
      write_survey(out, demig_out);
      std::printf("modeled %zu traces into %s\n", out.traces.size(), demig_out.c_str());
    } else if (*scan) {
      require_file(scan_in);
      const MigrationJob job = make_job(scan_grid, VelocityModel::constant(1.0), scan_kernel);
      const Survey survey = read_survey(scan_in);
      const auto candidates = parse_list(scan_candidates, "--candidates");
      const ScanResult result = constant_velocity_scan(survey, candidates, job, scan_exec.migrator(scan_in));
      print_scan(result);
      if (!scan_out.empty()) write_csv(scan_out, {"vrms", "focus_metric"}, scan_rows(result));
    } else if (*loop) {
      require_file(loop_in);
      const MigrationJob job = make_job(loop_grid, loop_vel.model(), loop_kernel);
      const Survey survey = read_survey(loop_in);
      loop_params.candidates = parse_list(loop_candidates, "--candidates");
      const LoopReport report = imaging_loop(survey, job.vel, loop_params, job, loop_exec.migrator(loop_in));
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < report.history.size(); ++i) {
        const auto& h = report.history[i];
        const double v = h.velocity.knots().front().vrms;
        std::printf("iteration %zu: vrms(0)=%.3f max|lag|=%d at ix=%u\n", i + 1, v, h.max_abs_lag, h.ix);
        rows.push_back({static_cast<double>(i + 1), v, static_cast<double>(h.max_abs_lag)});
      }
      std::printf("%s after %u iteration(s); final vrms(0)=%.3f\n",
                  report.converged ? "converged" : "not converged", report.iterations,
                  report.final_velocity.knots().front().vrms);
      if (!loop_report.empty()) write_csv(loop_report, {"iteration", "vrms", "max_abs_lag"}, rows);
      if (!loop_out.empty()) {
        GridOpts g = loop_grid;
        GridGeometry geom{g.x_min, g.dx, g.nx, g.tau_min, g.dtau, g.ntau, 1};
        ImageGrid stacked(geom);
        std::copy(report.final_image.values.begin(), report.final_image.values.end(),
                  stacked.values().begin());
        write_image(stacked, loop_out);
      }
      if (!loop_pgm.empty()) export_pgm(report.final_image, loop_pgm, gain);
    } else if (*adj) {
      const AdjointCheck check = adjoint_dot_test(adj_seed, adj_nx, adj_ntau, adj_traces);
      std::printf("<L m, d>   = %.17g\n<m, L^T d> = %.17g\nrelative error = %.3e (tolerance %.1e)\n",
                  check.data_side, check.image_side, check.relative_error(), adj_tol);
      if (!(check.relative_error() <= adj_tol)) {
        std::cerr << "error: adjoint test failed\n";
        return kExitRuntime;
      }
    } else if (*est) {
      const FlopEstimate e =
          estimate_flops(as_count(nxyz, "--nxyz"), as_count(ntraces, "--ntraces"), as_count(fk, "--fk"));
      std::printf("flops: %llu (%.3e)\ngflop_years: %.4g\n",
                  static_cast<unsigned long long>(e.flops), static_cast<double>(e.flops), e.gflop_years);
    } else if (*worker) {
      const std::size_t served = mr::run_worker(connect, resolve_migration_manifest);
      std::fprintf(stderr, "worker served %zu task(s)\n", served);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const JobError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    // Domain, validation, parse and format errors all stem from the inputs.
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace pktm::cli
