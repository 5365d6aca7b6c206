#include <doctest.h>

#include <numbers>
#include <random>

#include "fxpde/transform.hpp"

using namespace fxpde;

namespace {

DomainSpec unit_domain_1d() {
  DomainSpec d;
  d.spatial_dim = 1;
  d.extents = {1.0, 0, 0};
  d.horizon = 1.0;
  d.components = 1;
  return d;
}

FieldArray random_field(const SpaceTimeGrid& grid, int comps, std::mt19937_64& rng) {
  FieldArray f = FieldArray::zeros(grid, comps);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : f.values) v = dist(rng);
  return f;
}

}  // namespace

TEST_CASE("build_grid basic arithmetic") {
  const auto g = build_grid(unit_domain_1d(), {8, 8}, 2.0);
  CHECK(g.padded(0) == 16);
  CHECK(g.padded(1) == 16);
  CHECK(g.spacing(0) == doctest::Approx(1.0 / 8));
  CHECK(g.spacing(1) == doctest::Approx(1.0 / 8));
  CHECK(g.cell_count() == 256);
  CHECK(g.frequencies(0).size() == 16);
}

TEST_CASE("build_grid enforces the 2x padding floor") {
  const auto g = build_grid(unit_domain_1d(), {8, 8}, 1.0);
  CHECK(g.padded(0) == 16);  // pad factor 1 raised to the floor
  CHECK(g.pad_cells(0) == 8);
}

TEST_CASE("build_grid rejects tiny resolutions and bad factors") {
  CHECK_THROWS_AS(build_grid(unit_domain_1d(), {2, 8}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(unit_domain_1d(), {8, 8}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(unit_domain_1d(), {8}, 2.0), std::invalid_argument);
  DomainSpec bad = unit_domain_1d();
  bad.horizon = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("forward transform integrates the indicator exactly at xi = 0") {
  const auto g = build_grid(unit_domain_1d(), {16, 16}, 2.0);
  const IndicatorMask mask(g);
  FieldArray one = FieldArray::zeros(g, 1);
  for (auto& v : one.values) v = 1.0;
  const auto spec = forward_transform(one, mask, g);
  CHECK(std::abs(spec.component(0)[0] - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("full-period frequency integrates to zero for constant data") {
  const auto g = build_grid(unit_domain_1d(), {16, 16}, 2.0);
  const IndicatorMask mask(g);
  FieldArray one = FieldArray::zeros(g, 1);
  for (auto& v : one.values) v = 1.0;
  const auto spec = forward_transform(one, mask, g);
  // xi0 = 2*pi sits at time index 2 (padded length 32, T_pad = 2)
  const auto& xi0 = g.frequencies(0);
  int k = -1;
  for (int i = 0; i < g.padded(0); ++i)
    if (std::abs(xi0[static_cast<std::size_t>(i)] - 2 * std::numbers::pi) < 1e-12) k = i;
  REQUIRE(k >= 0);
  CHECK(std::abs(spec.component(0)[k * g.stride(0)]) < 1e-12);
}

TEST_CASE("forward transform matches the direct cell-sum quadrature") {
  // brute-force oracle: sum f * exp(-i xi . x) dV over all interior cells
  const auto g = build_grid(unit_domain_1d(), {12, 12}, 2.0);
  const IndicatorMask mask(g);
  FieldArray f = FieldArray::zeros(g, 1);
  for (std::int64_t i = 0; i < g.cell_count(); ++i) {
    int idx[4];
    g.unflatten(i, idx);
    const double t = g.coord(0, idx[0]);
    const double x = g.coord(1, idx[1]);
    f.component(0)[i] = std::exp(-30.0 * ((x - 0.5) * (x - 0.5) + (t - 0.5) * (t - 0.5)));
  }
  const auto spec = forward_transform(f, mask, g);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick_t(0, g.padded(0) - 1), pick_x(0, g.padded(1) - 1);
  for (int trial = 0; trial < 12; ++trial) {
    const int kt = pick_t(rng), kx = pick_x(rng);
    const double xi0 = g.frequencies(0)[static_cast<std::size_t>(kt)];
    const double xi1 = g.frequencies(1)[static_cast<std::size_t>(kx)];
    std::complex<double> direct = 0;
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
      if (!mask[i]) continue;
      int idx[4];
      g.unflatten(i, idx);
      const double phase = -xi0 * g.coord(0, idx[0]) - xi1 * g.coord(1, idx[1]);
      direct += f.component(0)[i] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    direct *= g.cell_volume();
    const auto got = spec.component(0)[kt * g.stride(0) + kx];
    CHECK(std::abs(got - direct) <= 1e-10 * (1.0 + std::abs(direct)));
  }
}

TEST_CASE("round trip recovers the masked field") {
  std::mt19937_64 rng(1);
  const auto g = build_grid(unit_domain_1d(), {16, 16}, 2.0);
  const IndicatorMask mask(g);
  FieldArray f = random_field(g, 2, rng);
  FieldArray fm = f;
  mask.apply(fm);
  const auto spec = forward_transform(f, mask, g);
  double residue = 0;
  const FieldArray back = inverse_transform(spec, g, &residue);
  double max_err = 0, scale = 0;
  for (std::size_t i = 0; i < fm.values.size(); ++i) {
    max_err = std::max(max_err, std::abs(back.values[i] - fm.values[i]));
    scale = std::max(scale, std::abs(fm.values[i]));
  }
  CHECK(max_err <= 1e-12 * scale);
  CHECK(residue <= 1e-12);
}

TEST_CASE("zero spectrum gives the zero field") {
  const auto g = build_grid(unit_domain_1d(), {8, 8}, 2.0);
  const SpectralArray zero = SpectralArray::zeros(g, 1);
  const FieldArray f = inverse_transform(zero, g);
  for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("discrete Plancherel identity over random fields") {
  std::mt19937_64 rng(42);
  const auto g = build_grid(unit_domain_1d(), {8, 8}, 2.0);
  const IndicatorMask mask(g);
  for (int trial = 0; trial < 100; ++trial) {
    FieldArray f = random_field(g, 1, rng);
    FieldArray fm = f;
    mask.apply(fm);
    const auto spec = forward_transform(f, mask, g);
    const double lhs = spectral_norm(spec, g);
    const double rhs = grid_norm(fm, g);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
  }
}

TEST_CASE("mask application is idempotent") {
  std::mt19937_64 rng(3);
  const auto g = build_grid(unit_domain_1d(), {8, 8}, 2.0);
  const IndicatorMask mask(g);
  FieldArray f = random_field(g, 1, rng);
  FieldArray once = f;
  mask.apply(once);
  FieldArray twice = once;
  mask.apply(twice);
  CHECK(once.values == twice.values);
  CHECK(mask.ones_count() == 64);
}

TEST_CASE("transforms work on a 2D spatial grid") {
  DomainSpec d;
  d.spatial_dim = 2;
  d.extents = {1.0, 0.5, 0};
  d.horizon = 0.25;
  d.components = 1;
  std::mt19937_64 rng(5);
  const auto g = build_grid(d, {4, 6, 4}, 2.0);
  const IndicatorMask mask(g);
  FieldArray f = random_field(g, 1, rng);
  FieldArray fm = f;
  mask.apply(fm);
  const FieldArray back = inverse_transform(forward_transform(f, mask, g), g);
  for (std::size_t i = 0; i < fm.values.size(); ++i)
    CHECK(back.values[i] == doctest::Approx(fm.values[i]).epsilon(1e-12));
}

TEST_CASE("field dumps detect non-finite values") {
  const auto g = build_grid(unit_domain_1d(), {8, 8}, 2.0);
  FieldArray f = FieldArray::zeros(g, 1);
  CHECK(f.all_finite());
  f.values[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK(!f.all_finite());
}
