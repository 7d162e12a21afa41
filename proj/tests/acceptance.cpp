// Acceptance run: one [PASS]/[FAIL] line per criterion; nonzero exit on any failure.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "pktm/distributed.hpp"
#include "pktm/errors.hpp"
#include "pktm/selftest.hpp"
#include "pktm/storage.hpp"
#include "pktm/traveltime.hpp"
#include "pktm/velocity_analysis.hpp"

using namespace pktm;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, double seconds) {
  std::printf("[%s] C%d %s: %s (%.2f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename Fn>
void criterion(int id, const std::string& what, Fn&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail += std::string(detail.empty() ? "" : "; ") + "exception: " + e.what();
    ok = false;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, ok, what, detail, s);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Survey& survey() {
  static const Survey s = testing::diffractor_survey();
  return s;
}

mr::JobConfig engine(mr::Mode mode, std::uint32_t workers, bool combiner) {
  mr::JobConfig c;
  c.mode = mode;
  c.n_workers = workers;
  c.combiner_enabled = combiner;
  c.task_timeout = 30.0;
  return c;
}

// Jobs run through the engine in criteria 3-5, with their sort-contract flag.
std::vector<std::pair<std::string, bool>> sort_log;

ImageGrid run_engine(const std::string& label, const MigrationJob& job, const mr::JobConfig& c,
                     mr::JobStats* out = nullptr) {
  mr::JobStats stats;
  ImageGrid img = migrate_survey_mapreduce(survey(), job, c, {}, &stats);
  sort_log.emplace_back(label, stats.keys_strictly_ascending);
  if (out) *out = stats;
  return img;
}

std::string reference_bytes() {
  static const std::string b = encode_image(migrate_survey_serial(survey(), testing::diffractor_job()));
  return b;
}

}  // namespace

int main() {
  std::printf("pktm acceptance run\n");

  criterion(1, "cost estimate", [](std::string& d) {
    const FlopEstimate e = estimate_flops(1'000'000'000ull, 10'000'000ull, 10ull);
    d = fmt("flops=%.3e gflop_years=%.4f (target 3.17 +-5%%)", double(e.flops), e.gflop_years);
    return e.flops == 100'000'000'000'000'000ull && std::fabs(e.gflop_years - 3.17) <= 0.05 * 3.17;
  });

  criterion(2, "adjoint identity", [](std::string& d) {
    const AdjointCheck c = adjoint_dot_test(20260501, 48, 48, 50);
    d = fmt("<Lm,d>=%.12e <m,L'd>=%.12e rel=%.3e (<= 1e-10)", c.data_side, c.image_side,
            c.relative_error());
    return c.relative_error() <= 1e-10;
  });

  criterion(3, "point-diffractor focusing", [](std::string& d) {
    const auto cell = testing::scatterer_cell();
    const auto serial = engine(mr::Mode::serial, 1, true);
    double amp[3];
    bool argmax_ok = false;
    std::uint32_t bx = 0, bt = 0;
    const double scales[3] = {0.9, 1.0, 1.1};
    for (int i = 0; i < 3; ++i) {
      const auto job = testing::diffractor_job(testing::kTrueVelocity * scales[i]);
      const auto stacked = stack_offsets(run_engine(fmt("focus v*%.1f", scales[i]), job, serial));
      amp[i] = stacked.at(cell.ix, cell.itau);
      if (i == 1) {
        double best = -1.0;
        for (std::uint32_t ix = 0; ix < stacked.nx; ++ix)
          for (std::uint32_t it = 0; it < stacked.ntau; ++it)
            if (std::fabs(stacked.at(ix, it)) > best) {
              best = std::fabs(stacked.at(ix, it));
              bx = ix;
              bt = it;
            }
        argmax_ok = std::abs(int(bx) - int(cell.ix)) <= 1 && std::abs(int(bt) - int(cell.itau)) <= 1;
      }
    }
    d = fmt("%zu traces; argmax (ix=%u, itau=%u) vs true (%u, %u); amp 0.9v=%.4g 1.0v=%.4g 1.1v=%.4g",
            survey().traces.size(), bx, bt, cell.ix, cell.itau, amp[0], amp[1], amp[2]);
    return survey().traces.size() >= 400 && argmax_ok && amp[0] < amp[1] && amp[2] < amp[1];
  });

  criterion(4, "map-reduce equals serial bit for bit", [](std::string& d) {
    const auto job = testing::diffractor_job();
    const std::string ref = reference_bytes();
    struct Run {
      const char* label;
      mr::Mode mode;
      std::uint32_t workers;
      bool combiner;
    };
    const Run runs[] = {
        {"serial", mr::Mode::serial, 1, true},
        {"serial/no-combiner", mr::Mode::serial, 1, false},
        {"threaded W=1", mr::Mode::threaded, 1, true},
        {"threaded W=2", mr::Mode::threaded, 2, true},
        {"threaded W=8", mr::Mode::threaded, 8, true},
        {"threaded W=8/no-combiner", mr::Mode::threaded, 8, false},
        {"multiprocess W=2", mr::Mode::multiprocess, 2, true},
        {"multiprocess W=2/no-combiner", mr::Mode::multiprocess, 2, false},
    };
    int same = 0;
    std::string bad;
    for (const auto& r : runs) {
      if (encode_image(run_engine(r.label, job, engine(r.mode, r.workers, r.combiner))) == ref)
        ++same;
      else
        bad += std::string(" ") + r.label;
    }
    d = fmt("%d/%zu runs byte-identical to the serial reference (%zu bytes)%s%s", same,
            std::size(runs), ref.size(), bad.empty() ? "" : "; differ:", bad.c_str());
    return same == static_cast<int>(std::size(runs));
  });

  criterion(5, "worker killed after first TASK_DONE", [](std::string& d) {
    auto c = engine(mr::Mode::multiprocess, 2, true);
    c.fault.kill_worker_after_first_done = 0;
    mr::JobStats stats;
    const auto img = run_engine("multiprocess W=2 + kill", testing::diffractor_job(), c, &stats);
    const bool same = encode_image(img) == reference_bytes();
    d = fmt("workers lost=%zu retries=%zu attempts=%zu; output %s", stats.workers_lost,
            stats.task_retries, stats.task_attempts, same ? "identical" : "DIFFERS");
    return same && stats.workers_lost >= 1 && stats.task_retries >= 1;
  });

  criterion(6, "reduced keys strictly ascending", [](std::string& d) {
    std::size_t ok = 0;
    std::string bad;
    for (const auto& [label, asc] : sort_log) {
      if (asc)
        ++ok;
      else
        bad += " " + label;
    }
    d = fmt("%zu/%zu engine jobs from C3-C5 asserted ascending%s", ok, sort_log.size(), bad.c_str());
    return !sort_log.empty() && ok == sort_log.size();
  });

  criterion(7, "velocity recovery", [](std::string& d) {
    const auto job = testing::diffractor_job();
    const std::vector<double> cands{1800, 1900, 2000, 2100, 2200};
    const auto scan = constant_velocity_scan(survey(), cands, job);
    LoopParams p;
    p.candidates = cands;
    p.max_shift = 20;
    const auto loop = imaging_loop(survey(), VelocityModel::constant(1700.0), p, job);
    const double vfinal = loop.final_velocity.knots().front().vrms;
    int worst = 0;
    for (int l : loop.history.back().lags) worst = std::max(worst, std::abs(l));
    std::string lags;
    for (const auto& h : loop.history) lags += fmt(" %.0f:%d", h.velocity.knots().front().vrms, h.max_abs_lag);
    d = fmt("scan pick %.0f; loop %s in %u iteration(s), final %.0f, max|lag| %d (per iteration v:lag%s)",
            scan.candidates[scan.best].vrms, loop.converged ? "converged" : "did not converge",
            loop.iterations, vfinal, worst, lags.c_str());
    return scan.candidates[scan.best].vrms == 2000.0 && loop.converged &&
           loop.final_velocity.knots().size() == 1 && vfinal == 2000.0 && worst <= 1;
  });

  criterion(8, "property suites", [](std::string& d) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> x(-5000.0, 5000.0), tau(0.0, 4.0), v(1000.0, 6000.0);

    // traveltime: symmetry, lower bound, monotone in |h| and tau
    std::size_t tt = 0, tt_bad = 0;
    for (; tt < 10000; ++tt) {
      const double xi = x(rng), xs = x(rng), xr = x(rng), t = tau(rng), vr = v(rng);
      const double a = dsr_total_time(xi, t, xs, xr, vr);
      const double far = xs + (xs >= xi ? 10.0 : -10.0);
      if (a != dsr_total_time(xi, t, xr, xs, vr) || a < t || a < (std::fabs(xi - xs) + std::fabs(xi - xr)) / vr * (1 - 1e-12) ||
          !(dsr_total_time(xi, t, far, xr, vr) > a) || dsr_total_time(xi, t + 0.01, xs, xr, vr) <= a)
        ++tt_bad;
    }

    // migration linearity
    MigrationJob job;
    job.grid = {0.0, 20.0, 16, 0.0, 0.008, 40, 2};
    job.binning = OffsetBinning({0.0, 300.0, 2000.0});
    job.vel = VelocityModel({{0.0, 1800.0}, {0.3, 2400.0}});
    job.params = {150.0, WeightMode::obliquity};
    std::size_t lin = 0, lin_bad = 0;
    std::uniform_real_distribution<double> pos(0.0, 300.0), amp(-1.0, 1.0);
    for (; lin < 50; ++lin) {
      TraceHeader h;
      h.source_x = pos(rng);
      h.receiver_x = pos(rng);
      h.n_samples = 100;
      Trace a = Trace::zeros(h), b = Trace::zeros(h), m = Trace::zeros(h);
      // Samples on a 1/256 lattice, so the mixed trace is exact in f32.
      for (std::size_t k = 0; k < 100; ++k) {
        a.samples[k] = float(int(rng() % 513) - 256) / 256.0f;
        b.samples[k] = float(int(rng() % 513) - 256) / 256.0f;
        m.samples[k] = float(0.5 * a.samples[k] - 2.0 * b.samples[k]);
      }
      ImageGrid ia(job.grid), ib(job.grid), im(job.grid);
      for (const auto& c : migrate_trace(a, job)) ia.at(c.key) += c.value;
      for (const auto& c : migrate_trace(b, job)) ib.at(c.key) += c.value;
      for (const auto& c : migrate_trace(m, job)) im.at(c.key) += c.value;
      for (std::size_t i = 0; i < im.values().size(); ++i) {
        const double e = 0.5 * ia.values()[i] - 2.0 * ib.values()[i];
        if (std::fabs(im.values()[i] - e) > 1e-12 * (1.0 + std::fabs(e))) {
          ++lin_bad;
          break;
        }
      }
    }

    // combine vs brute force
    std::size_t cb = 0, cb_bad = 0;
    for (; cb < 10000; ++cb) {
      std::vector<mr::KeyValue> in(rng() % 24);
      for (auto& kv : in) kv = {rng() % 7, amp(rng)};
      std::map<std::uint64_t, double> brute;
      for (const auto& kv : in) brute[kv.key] += kv.value;
      const auto got = mr::combine(in);
      bool ok = got.size() == brute.size();
      std::size_t i = 0;
      for (const auto& [k, val] : brute) ok = ok && got[i].key == k && got[i++].value == val;
      if (!ok) ++cb_bad;
    }

    // file formats: round trips and single-byte header mutations
    std::size_t rt = 0, rt_bad = 0;
    for (; rt < 200; ++rt) {
      Survey s;
      for (std::uint32_t i = 0; i < rng() % 5; ++i) {
        TraceHeader h;
        h.trace_id = i;
        h.source_x = x(rng);
        h.receiver_x = x(rng);
        h.dt = 0.001 + 0.01 * std::fabs(amp(rng));
        h.n_samples = 1 + rng() % 30;
        Trace t = Trace::zeros(h);
        for (auto& smp : t.samples) smp = float(amp(rng));
        s.traces.push_back(t);
      }
      if (decode_survey(encode_survey(s)).traces != s.traces) ++rt_bad;
      GridGeometry g{x(rng), 10.0, 1 + std::uint32_t(rng() % 5), 0.0, 0.004, 1 + std::uint32_t(rng() % 5),
                     1 + std::uint32_t(rng() % 3)};
      ImageGrid img(g);
      for (auto& val : img.values()) val = x(rng);
      if (!(decode_image(encode_image(img)) == img)) ++rt_bad;
    }
    const Survey base = testing::diffractor_survey();
    Survey three;
    three.traces.assign(base.traces.begin(), base.traces.begin() + 3);
    const std::string bytes = encode_survey(three);
    const std::size_t stride = 36 + 4 * 501;
    std::size_t fz = 0, fz_bad = 0, fz_rejected = 0;
    for (; fz < 2000; ++fz) {
      // structural bytes: magic, count, and each trace's n_samples
      std::size_t pos_b;
      bool structural;
      const auto pick = rng() % 5;
      const std::size_t trace = rng() % 3;
      if (pick == 0) {
        pos_b = rng() % 8;
        structural = true;
      } else if (pick == 1) {
        pos_b = 8 + trace * stride + 32 + rng() % 4;
        structural = true;
      } else {
        pos_b = 8 + trace * stride + rng() % 32;
        structural = false;
      }
      std::string m = bytes;
      m[pos_b] = char(m[pos_b] ^ (1 + rng() % 255));
      try {
        const Survey back = decode_survey(m);
        if (structural || encode_survey(back) != m) ++fz_bad;
      } catch (const FormatError&) {
        ++fz_rejected;
      }
    }

    d = fmt("traveltime %zu cases/%zu bad; linearity %zu/%zu bad; combine %zu/%zu bad; "
            "round trips %zu/%zu bad; header fuzz %zu cases, %zu rejected, %zu bad",
            tt, tt_bad, lin, lin_bad, cb, cb_bad, rt * 2, rt_bad, fz, fz_rejected, fz_bad);
    return tt_bad == 0 && lin_bad == 0 && cb >= 10000 && cb_bad == 0 && rt_bad == 0 && fz >= 1000 &&
           fz_bad == 0;
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures == 0 ? 0 : 1;
}
