#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "pktm/errors.hpp"
#include "pktm/synthetics.hpp"
#include "pktm/traveltime.hpp"

using namespace pktm;

TEST_CASE("make_acquisition is source-major") {
  const auto h = make_acquisition({2, 10.0, 100.0, 3, 0.0, 25.0, 8, 0.002});
  REQUIRE(h.size() == 6);
  for (std::uint32_t s = 0; s < 2; ++s)
    for (std::uint32_t r = 0; r < 3; ++r) {
      const auto& t = h[s * 3 + r];
      CHECK(t.trace_id == s * 3 + r);
      CHECK(t.source_x == 10.0 + 100.0 * s);
      CHECK(t.receiver_x == 25.0 * r);
      CHECK(t.n_samples == 8);
      CHECK(t.dt == 0.002);
      CHECK(t.t0 == 0.0);
    }
  CHECK_THROWS_AS(make_acquisition({0, 0, 1, 1, 0, 1, 1, 0.004}), DomainError);
  CHECK_THROWS_AS(make_acquisition({1, 0, 1, 1, 0, 1, 1, 0.0}), DomainError);
}

TEST_CASE("ricker wavelet shape") {
  const double f = 25.0;
  CHECK(ricker(f, 0.0) == 1.0);
  const double zero = 1.0 / (std::numbers::pi * f * std::numbers::sqrt2);
  CHECK(std::fabs(ricker(f, zero)) < 1e-15);
  CHECK(ricker(f, 0.5 * zero) > 0.0);
  CHECK(ricker(f, 1.5 * zero) < 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(-0.2, 0.2);
  for (int i = 0; i < 1000; ++i) {
    const double s = t(rng);
    CHECK(ricker(f, s) == ricker(f, -s));
    CHECK(ricker(f, s) <= 1.0);
  }
}

TEST_CASE("flat_reflector spacing") {
  const auto r = flat_reflector(0.5, 100.0, 200.0, 25.0, 2.0);
  REQUIRE(r.size() == 5);
  CHECK(r.front().x == 100.0);
  CHECK(r.back().x == 200.0);
  for (const auto& s : r) {
    CHECK(s.tau == 0.5);
    CHECK(s.amplitude == 2.0);
  }
  CHECK_THROWS_AS(flat_reflector(0.5, 1.0, 0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(flat_reflector(0.5, 0.0, 1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("no scatterers gives silent traces") {
  const auto s = synth_survey(make_acquisition({2, 0, 50, 2, 0, 50, 20, 0.004}), {},
                              VelocityModel::constant(2000.0), Wavelet{}, OffsetBinning({0, 1e3}));
  CHECK(s.traces.size() == 4);
  for (const auto& t : s.traces)
    for (float v : t.samples) CHECK(v == 0.0f);
}

TEST_CASE("event peaks at the DSR traveltime") {
  const auto survey = testing::diffractor_survey();
  const auto vel = VelocityModel::constant(testing::kTrueVelocity);
  for (std::size_t i : {0u, 57u, 210u, 399u}) {
    const auto& tr = survey.traces[i];
    const double t_star = dsr_total_time(testing::kScattererX, testing::kScattererTau,
                                         tr.header.source_x, tr.header.receiver_x, vel);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < tr.samples.size(); ++k)
      if (tr.samples[k] > tr.samples[peak]) peak = k;
    if (t_star > tr.header.t_end()) continue;
    CHECK(std::fabs(peak * tr.header.dt - t_star) <= 0.5 * tr.header.dt + 1e-12);
  }
}

TEST_CASE("zero-offset trace above a scatterer peaks at tau, offset traces later") {
  const auto vel = VelocityModel::constant(2000.0);
  const OffsetBinning bins({0.0, 1e4});
  TraceHeader above;
  above.source_x = above.receiver_x = 300.0;
  above.n_samples = 300;
  TraceHeader offset = above;
  offset.source_x = 100.0;
  offset.receiver_x = 500.0;
  const auto s = synth_survey({above, offset}, {{300.0, 0.6, 1.0}}, vel, Wavelet{}, bins);
  auto peak = [](const Trace& t) {
    std::size_t k = 0;
    for (std::size_t i = 1; i < t.samples.size(); ++i)
      if (t.samples[i] > t.samples[k]) k = i;
    return k * t.header.dt;
  };
  CHECK(peak(s.traces[0]) == doctest::Approx(0.6));
  CHECK(s.traces[0].samples[150] == 1.0f);
  CHECK(peak(s.traces[1]) > 0.6);
  CHECK(peak(s.traces[1]) == doctest::Approx(2.0 * std::hypot(0.3, 200.0 / 2000.0)).epsilon(0.01));
}

TEST_CASE("synthetics are linear in scatterer amplitude and superpose") {
  const auto headers = make_acquisition({3, 0, 100, 3, 50, 100, 300, 0.004});
  const auto vel = VelocityModel({{0.0, 1800.0}, {1.0, 2600.0}});
  const OffsetBinning bins({0.0, 1e4});
  const Scatterer a{120.0, 0.4, 1.0}, b{260.0, 0.7, -0.5};
  const auto sa = synth_survey(headers, {a}, vel, Wavelet{30.0}, bins);
  const auto sb = synth_survey(headers, {b}, vel, Wavelet{30.0}, bins);
  const auto sab = synth_survey(headers, {a, b}, vel, Wavelet{30.0}, bins);
  auto a2 = a;
  a2.amplitude = 2.0;
  const auto s2 = synth_survey(headers, {a2}, vel, Wavelet{30.0}, bins);
  for (std::size_t i = 0; i < headers.size(); ++i)
    for (std::size_t k = 0; k < headers[i].n_samples; ++k) {
      CHECK(sab.traces[i].samples[k] ==
            doctest::Approx(sa.traces[i].samples[k] + sb.traces[i].samples[k]).scale(1.0).epsilon(1e-6));
      CHECK(s2.traces[i].samples[k] == doctest::Approx(2.0 * sa.traces[i].samples[k]).scale(1e-30).epsilon(1e-6));
    }
}

TEST_CASE("source-receiver reciprocity") {
  const auto vel = VelocityModel::constant(2200.0);
  const OffsetBinning bins({0.0, 1e4});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> x(0.0, 1000.0);
  for (int i = 0; i < 50; ++i) {
    TraceHeader h;
    h.source_x = x(rng);
    h.receiver_x = x(rng);
    h.n_samples = 200;
    TraceHeader swapped = h;
    std::swap(swapped.source_x, swapped.receiver_x);
    const std::vector<Scatterer> sc{{x(rng), 0.3, 1.0}};
    const auto s1 = synth_survey({h}, sc, vel, Wavelet{}, bins);
    const auto s2 = synth_survey({swapped}, sc, vel, Wavelet{}, bins);
    CHECK(s1.traces[0].samples == s2.traces[0].samples);
  }
}

TEST_CASE("noise is seeded") {
  const auto headers = make_acquisition({1, 0, 1, 2, 0, 1, 50, 0.004});
  const OffsetBinning bins({0.0, 10.0});
  const auto vel = VelocityModel::constant(2000.0);
  const auto a = synth_survey(headers, {}, vel, Wavelet{}, bins, {0.1, 7});
  const auto b = synth_survey(headers, {}, vel, Wavelet{}, bins, {0.1, 7});
  const auto c = synth_survey(headers, {}, vel, Wavelet{}, bins, {0.1, 8});
  CHECK(a.traces[1].samples == b.traces[1].samples);
  CHECK(a.traces[1].samples != c.traces[1].samples);
  double sum2 = 0.0;
  for (const auto& t : a.traces)
    for (float v : t.samples) sum2 += double(v) * v;
  CHECK(std::sqrt(sum2 / 100.0) == doctest::Approx(0.1).epsilon(0.3));
}

TEST_CASE("invalid synthetic inputs") {
  const auto headers = make_acquisition({1, 0, 1, 1, 0, 1, 5, 0.004});
  const auto vel = VelocityModel::constant(2000.0);
  const OffsetBinning bins({0.0, 10.0});
  CHECK_THROWS_AS(synth_survey(headers, {}, vel, Wavelet{0.0}, bins), DomainError);
  CHECK_THROWS_AS(synth_survey(headers, {{0.0, -1.0, 1.0}}, vel, Wavelet{}, bins), DomainError);
  CHECK_THROWS_AS(synth_survey(headers, {{0.0, 0.1, NAN}}, vel, Wavelet{}, bins), DomainError);
}
