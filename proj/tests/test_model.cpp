#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pktm/errors.hpp"
#include "pktm/model.hpp"

using namespace pktm;

TEST_CASE("estimate_flops reproduces the migration cost figure") {
  const auto e = estimate_flops(1'000'000'000ull, 10'000'000ull, 10);
  CHECK(e.flops == 100'000'000'000'000'000ull);
  // 1e17 / (1e9 * 365.25 * 86400) = 3.1688...
  CHECK(e.gflop_years == doctest::Approx(3.1688087814028950).epsilon(1e-12));
}

TEST_CASE("estimate_flops degenerate and unit cases") {
  CHECK(estimate_flops(123456, 0, 99).flops == 0);
  CHECK(estimate_flops(123456, 0, 99).gflop_years == 0.0);
  CHECK(estimate_flops(std::numeric_limits<std::uint64_t>::max(), 0, 7).flops == 0);
  const auto unit = estimate_flops(1, 1, 1);
  CHECK(unit.flops == 1);
  CHECK(unit.gflop_years == doctest::Approx(3.168808781402895e-17).epsilon(1e-12));
}

TEST_CASE("estimate_flops reports overflow") {
  CHECK_THROWS_AS(estimate_flops(1ull << 40, 1ull << 30, 1), OverflowError);
  CHECK_THROWS_AS(estimate_flops(1ull << 32, 1ull << 31, 4), OverflowError);
  CHECK_NOTHROW(estimate_flops(1ull << 32, 1ull << 31, 1));
}

TEST_CASE("cell_key_ordinal examples") {
  GridGeometry g{0.0, 1.0, 10, 0.0, 0.004, 100, 3};
  CHECK(cell_key_ordinal({0, 0, 0}, g) == 0);
  CHECK(cell_key_ordinal({0, 1, 0}, g) == 100);

  // Oracle: walk the cells in lexicographic (b, ix, itau) order.
  std::uint64_t index = 0, found = 0;
  for (std::uint32_t b = 0; b < g.n_offset_bins; ++b)
    for (std::uint32_t ix = 0; ix < g.nx; ++ix)
      for (std::uint32_t it = 0; it < g.ntau; ++it, ++index)
        if (b == 1 && ix == 2 && it == 3) found = index;
  CHECK(found == 1203);
  CHECK(cell_key_ordinal({1, 2, 3}, g) == 1203);
}

TEST_CASE("cell_key_ordinal rejects out-of-bounds keys") {
  GridGeometry g{0.0, 1.0, 4, 0.0, 0.004, 5, 2};
  CHECK_THROWS_AS(cell_key_ordinal({2, 0, 0}, g), BoundsError);
  CHECK_THROWS_AS(cell_key_ordinal({0, 4, 0}, g), BoundsError);
  CHECK_THROWS_AS(cell_key_ordinal({0, 0, 5}, g), BoundsError);
  CHECK_THROWS_AS(cell_key_from_ordinal(40, g), BoundsError);
}

TEST_CASE("cell_key_ordinal is an order-preserving bijection on small grids") {
  for (std::uint32_t bins = 1; bins <= 3; ++bins)
    for (std::uint32_t nx = 1; nx <= 8; ++nx)
      for (std::uint32_t nt = 1; nt <= 8; ++nt) {
        GridGeometry g{0.0, 1.0, nx, 0.0, 1.0, nt, bins};
        std::uint64_t expect = 0;
        CellKey prev{};
        bool first = true;
        for (std::uint32_t b = 0; b < bins; ++b)
          for (std::uint32_t ix = 0; ix < nx; ++ix)
            for (std::uint32_t it = 0; it < nt; ++it) {
              const CellKey key{b, ix, it};
              const auto ord = cell_key_ordinal(key, g);
              REQUIRE(ord == expect++);
              REQUIRE(cell_key_from_ordinal(ord, g) == key);
              if (!first) REQUIRE(prev < key);
              prev = key;
              first = false;
            }
        REQUIRE(expect == g.cell_count());
      }
}

TEST_CASE("velocity model is continuous and exact at knots") {
  VelocityModel v({{0.0, 1500.0}, {1.0, 2000.0}, {2.5, 3500.0}});
  CHECK(v.at(0.0) == 1500.0);
  CHECK(v.at(1.0) == 2000.0);
  CHECK(v.at(2.5) == 3500.0);
  CHECK(v.at(0.5) == doctest::Approx(1750.0));
  CHECK(v.at(-1.0) == 1500.0);
  CHECK(v.at(9.0) == 3500.0);
  for (double knot : {1.0, 2.5}) {
    CHECK(v.at(knot - 1e-12) == doctest::Approx(v.at(knot)).epsilon(1e-9));
    CHECK(v.at(knot + 1e-12) == doctest::Approx(v.at(knot)).epsilon(1e-9));
  }
  CHECK(VelocityModel::constant(2000.0).at(3.0) == 2000.0);
}

TEST_CASE("velocity model validation") {
  CHECK_THROWS_AS(VelocityModel(std::vector<VelocityKnot>{}), ValidationError);
  CHECK_THROWS_AS(VelocityModel({{0.0, 0.0}}), ValidationError);
  CHECK_THROWS_AS(VelocityModel({{0.0, -5.0}}), ValidationError);
  CHECK_THROWS_AS(VelocityModel({{1.0, 2000.0}, {0.5, 1800.0}}), ValidationError);
  CHECK_THROWS_AS(VelocityModel({{1.0, 2000.0}, {1.0, 1800.0}}), ValidationError);
}

TEST_CASE("offset binning") {
  OffsetBinning bins({0.0, 250.0, 500.0});
  CHECK(bins.bin_count() == 2);
  CHECK(bins.bin_of(0.0) == 0u);
  CHECK(bins.bin_of(249.9) == 0u);
  CHECK(bins.bin_of(250.0) == 1u);
  CHECK_FALSE(bins.bin_of(500.0).has_value());
  CHECK_FALSE(bins.bin_of(-1.0).has_value());
  CHECK_THROWS_AS(OffsetBinning({0.0}), ValidationError);
  CHECK_THROWS_AS(OffsetBinning({-1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(OffsetBinning({0.0, 2.0, 2.0}), ValidationError);
  CHECK(OffsetBinning::single_bin_covering(950.0).bin_of(950.0) == 0u);
}

TEST_CASE("trace and header invariants") {
  TraceHeader h;
  h.n_samples = 3;
  CHECK_NOTHROW(h.validate());
  CHECK(h.t_end() == doctest::Approx(0.008));
  h.source_x = 100.0;
  h.receiver_x = -50.0;
  CHECK(h.offset() == 150.0);
  CHECK(h.midpoint() == 25.0);

  TraceHeader bad = h;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = h;
  bad.t0 = -0.1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = h;
  bad.n_samples = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  Trace t = Trace::zeros(h);
  CHECK_NOTHROW(t.validate());
  t.samples[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t.samples.pop_back();
  CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("survey requires trace_id == position") {
  Survey s;
  TraceHeader h;
  h.n_samples = 2;
  s.traces.push_back(Trace::zeros(h));
  h.trace_id = 5;
  s.traces.push_back(Trace::zeros(h));
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.traces[1].header.trace_id = 1;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("image grid indexing") {
  GridGeometry g{100.0, 10.0, 3, 0.2, 0.004, 4, 2};
  ImageGrid img(g);
  CHECK(img.values().size() == 24);
  img.at({1, 2, 3}) = 7.0;
  CHECK(img.values()[cell_key_ordinal({1, 2, 3}, g)] == 7.0);
  CHECK(g.x_at(2) == 120.0);
  CHECK(g.tau_at(3) == doctest::Approx(0.212));
  GridGeometry bad = g;
  bad.dx = 0.0;
  CHECK_THROWS_AS(ImageGrid{bad}, ValidationError);
}
