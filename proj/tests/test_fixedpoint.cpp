#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fxpde/fixedpoint.hpp"
#include "fxpde/oracles.hpp"

using namespace fxpde;

namespace {

struct Setup {
  ProblemSpec problem;
  ReductionPlan plan;
  ParameterSet params;
  SpaceTimeGrid grid;
  CausalityReport causality;
  KernelPair kernels;
};

Setup make(const std::string& text, std::optional<ParameterSet> params, int n, double pad_t = 8) {
  Setup s;
  s.problem = parse_problem_text(text, "fixture");
  s.plan = build_plan(s.problem.system);
  s.params = params ? *params : resolve_parameters(s.problem, s.plan);
  s.grid = build_grid(s.problem.domain, std::vector<int>(
                          static_cast<std::size_t>(s.problem.domain.axes()), n),
                      {pad_t, 2.0});
  s.causality = validate_parameters(s.plan, s.params);
  REQUIRE(s.causality.causal);
  const auto spectra = boundary_spectra(sample_boundary_data(s.problem, s.grid), s.grid);
  s.kernels = synthesize_kernels(s.plan, s.params, spectra, s.grid, 0.0, s.causality);
  return s;
}

const char* kReactionText =
    "[domain]\ndim = 1\nextent_x = 1\nhorizon = 0.5\n"
    "[system]\nu1_t = u1\n"
    "[initial]\nu1 = sin(3.141592653589793*x)\n"
    "[boundary.left]\nu1 = 0\n[boundary.right]\nu1 = 0\n";

std::mt19937_64 rng(17);

}  // namespace

TEST_CASE("psi cancels exactly when f equals the linear combination") {
  // f = -2 u1 + 0.5 u1_x with matching parameters (a, b) = (-2, 0.5)
  const char* text =
      "[domain]\ndim = 1\nextent_x = 1\nhorizon = 0.5\n"
      "[system]\nu1_t = -2*u1 + 0.5*u1_x\n"
      "[initial]\nu1 = sin(3.141592653589793*x)\n"
      "[boundary.left]\nu1 = 0\n[boundary.right]\nu1 = 0\n";
  const double abcd[2] = {-2.0, 0.5};
  auto s = make(text, ParameterSet::scalars(abcd, 1), 12);
  FieldArray z1 = FieldArray::zeros(s.grid, 2);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (auto& v : z1.values) v = dist(rng);
  const IndicatorMask mask(s.grid);
  const auto psi = evaluate_psi(z1, s.problem, s.plan, s.params, s.grid, mask);
  REQUIRE(!psi.fault);
  for (double v : psi.values.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("psi of the linear reaction is (lambda - a) u") {
  const double a = -2.0;
  const double abcd[2] = {a, 0.0};
  auto s = make(kReactionText, ParameterSet::scalars(abcd, 1), 12);
  FieldArray z1 = FieldArray::zeros(s.grid, 2);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (auto& v : z1.values) v = dist(rng);
  const IndicatorMask mask(s.grid);
  const auto psi = evaluate_psi(z1, s.problem, s.plan, s.params, s.grid, mask);
  REQUIRE(!psi.fault);
  for (std::int64_t i = 0; i < s.grid.cell_count(); ++i) {
    const double expect = mask[i] ? (1.0 - a) * z1.component(0)[i] : 0.0;
    CHECK(psi.values.component(0)[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("burgers psi matches an independent pointwise evaluation") {
  const char* text =
      "[domain]\ndim = 1\nextent_x = 1\nhorizon = 0.25\n"
      "[system]\nu1_t = -u1*u1_x\n"
      "[initial]\nu1 = 0.5\n"
      "[boundary.left]\nu1 = 0.5\n[boundary.right]\nu1 = 0.5\n";
  const double a = -1.0, b = 0.0;
  const double abcd[2] = {a, b};
  auto s = make(text, ParameterSet::scalars(abcd, 1), 12);
  FieldArray z1 = FieldArray::zeros(s.grid, 2);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (auto& v : z1.values) v = dist(rng);
  const IndicatorMask mask(s.grid);
  const auto psi = evaluate_psi(z1, s.problem, s.plan, s.params, s.grid, mask);
  REQUIRE(!psi.fault);
  for (std::int64_t i = 0; i < s.grid.cell_count(); ++i) {
    if (!mask[i]) continue;
    const double u = z1.component(0)[i], ux = z1.component(1)[i];
    const double expect = -u * ux - a * u - b * ux;
    CHECK(psi.values.component(0)[i] ==
          doctest::Approx(expect).epsilon(1e-12).scale(1.0 + std::abs(expect)));
  }
}

TEST_CASE("psi faults surface as diagnostics, not NaNs") {
  const char* text =
      "[domain]\ndim = 1\nextent_x = 1\nhorizon = 0.5\n"
      "[system]\nu1_t = 1/u1\n"
      "[initial]\nu1 = 1\n[boundary.left]\nu1 = 1\n[boundary.right]\nu1 = 1\n";
  const double abcd[2] = {-1.0, 0.0};
  auto s = make(text, ParameterSet::scalars(abcd, 1), 8);
  FieldArray z1 = FieldArray::zeros(s.grid, 2);  // u = 0 -> division by zero
  const IndicatorMask mask(s.grid);
  const auto psi = evaluate_psi(z1, s.problem, s.plan, s.params, s.grid, mask);
  CHECK(psi.fault);
  CHECK(psi.fault_what.find("division") != std::string::npos);
}

TEST_CASE("affine exactness: psi = 0 converges to w1 bit-exactly in one step") {
  // f identical to the linear part: the map is affine with zero residual
  const char* text =
      "[domain]\ndim = 1\nextent_x = 1\nhorizon = 0.5\n"
      "[system]\nu1_t = -2*u1\n"
      "[initial]\nu1 = sin(3.141592653589793*x)\n"
      "[boundary.left]\nu1 = 0\n[boundary.right]\nu1 = 0\n";
  const double abcd[2] = {-2.0, 0.0};
  auto s = make(text, ParameterSet::scalars(abcd, 1), 16);
  SolverConfig config;
  config.damping = 0.7;  // any damping: the step is exactly zero
  config.max_iterations = 10;
  Transformer transformer(s.grid);
  const auto sol = picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, config, transformer);
  CHECK(sol.report.converged);
  CHECK(sol.report.iterations == 1);
  const IndicatorMask mask(s.grid);
  for (int c = 0; c < 2; ++c)
    for (std::int64_t i = 0; i < s.grid.cell_count(); ++i) {
      const double expect = mask[i] ? s.kernels.w1.component(c)[i] : 0.0;
      CHECK(sol.z1.component(c)[i] == expect);  // bitwise
    }
}

TEST_CASE("linear reaction solve matches the pointwise oracle") {
  auto s = make(kReactionText, std::nullopt, 48);
  SolverConfig config;
  config.rel_tolerance = 1e-10;
  config.max_iterations = 200;
  Transformer transformer(s.grid);
  const auto sol = picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, config, transformer);
  CHECK(sol.report.converged);
  CHECK(sol.report.update_norm_final <= config.rel_tolerance);
  CHECK(sol.report.contraction_ratio < 1.0);
  // interior residual bound at convergence
  double scale = 0;
  {
    const IndicatorMask mask(s.grid);
    FieldArray w1m = s.kernels.w1;
    mask.apply(w1m);
    scale = grid_norm(w1m, s.grid) + grid_norm(sol.z1, s.grid);
  }
  CHECK(sol.report.interior_residual <= 2 * config.rel_tolerance * scale + 1e-14);

  const IndicatorMask mask(s.grid);
  const auto extracted = extract_solution(sol.z1, s.problem, s.plan, s.params, s.grid, mask);
  const auto oracle = ode_pointwise(Expression::parse("u1"),
                                    s.problem.initial_exprs[0], s.grid);
  const auto err = compare_to_oracle(extracted.u, 0, oracle, s.grid);
  CHECK(err.l2 < 0.05);
}

TEST_CASE("divergence fails loudly and returns the best iterate") {
  // transport with b = 0 reinstates the derivative feedback loop, which the
  // plain iteration cannot damp at this resolution
  const char* text =
      "[domain]\ndim = 1\nextent_x = 1\nhorizon = 0.5\n"
      "[system]\nu1_t = -u1_x\n"
      "[initial]\nu1 = exp(-200*(x - 0.4)^2)\n"
      "[boundary.left]\nu1 = exp(-200*(-t - 0.4)^2)\n"
      "[boundary.right]\nu1 = exp(-200*(0.6 - t)^2)\n";
  const double abcd[2] = {-2.0, 0.0};
  auto s = make(text, ParameterSet::scalars(abcd, 1), 48, 4);
  SolverConfig config;
  config.max_iterations = 400;
  config.damping = 0.8;
  config.rel_tolerance = 1e-10;
  Transformer transformer(s.grid);
  const auto sol = picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, config, transformer);
  CHECK(!sol.report.converged);
  CHECK(sol.report.diverged);
  CHECK(sol.report.iterations < config.max_iterations);  // the rule fired early
  CHECK(sol.z1.all_finite());                             // best iterate, not garbage
}

TEST_CASE("anderson mixing accelerates the linear reaction") {
  auto s = make(kReactionText, std::nullopt, 24);
  Transformer transformer(s.grid);
  SolverConfig plain;
  plain.rel_tolerance = 1e-11;
  plain.max_iterations = 400;
  plain.damping = 0.6;
  SolverConfig anderson = plain;
  anderson.anderson_depth = 4;
  const auto sol_plain =
      picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, plain, transformer);
  const auto sol_anderson =
      picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, anderson, transformer);
  CHECK(sol_plain.report.converged);
  CHECK(sol_anderson.report.converged);
  CHECK(sol_anderson.report.iterations < sol_plain.report.iterations);
}

TEST_CASE("classical residual splits interior and exterior as defined") {
  // psi = 0 problem: interior residual vanishes, exterior equals the norm of
  // w1 + conv over the outer band, which is the norm of w1 there
  const char* text =
      "[domain]\ndim = 1\nextent_x = 1\nhorizon = 0.5\n"
      "[system]\nu1_t = -2*u1\n"
      "[initial]\nu1 = sin(3.141592653589793*x)\n"
      "[boundary.left]\nu1 = 0\n[boundary.right]\nu1 = 0\n";
  const double abcd[2] = {-2.0, 0.0};
  auto s = make(text, ParameterSet::scalars(abcd, 1), 16);
  Transformer transformer(s.grid);
  SolverConfig config;
  const auto sol = picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, config, transformer);
  const auto [interior, exterior] = classical_residual(sol.z1, s.kernels, s.problem, s.plan,
                                                       s.params, s.grid, transformer);
  CHECK(interior <= 1e-10);
  // exterior = ||w1|| over the half-pad band (conv term is zero)
  std::vector<std::uint8_t> band(static_cast<std::size_t>(s.grid.cell_count()), 0);
  int idx[4];
  for (std::int64_t i = 0; i < s.grid.cell_count(); ++i) {
    s.grid.unflatten(i, idx);
    bool in_band = true, interior_cell = true;
    for (int a = 0; a < s.grid.axes(); ++a) {
      if (idx[a] >= s.grid.resolution(a) + s.grid.pad_cells(a) / 2) in_band = false;
      if (idx[a] >= s.grid.resolution(a)) interior_cell = false;
    }
    band[static_cast<std::size_t>(i)] = in_band && !interior_cell;
  }
  const double expect = grid_norm_region(s.kernels.w1, s.grid, band);
  CHECK(exterior == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("solution extraction recovers slots and resolved components") {
  // heat reduction: u1 is slot 0 and u2 = u1_x via the parameter row
  ProblemSpec p = builtin("heat_reduced_1d");
  const auto plan = build_plan(p.system);
  const auto params = resolve_parameters(p, plan);
  const auto grid = build_grid(p.domain, {16, 16}, {4.0, 2.0});
  const IndicatorMask mask(grid);
  FieldArray z1 = FieldArray::zeros(grid, 4);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (auto& v : z1.values) v = dist(rng);
  mask.apply(z1);
  const auto ex = extract_solution(z1, p, plan, params, grid, mask);
  REQUIRE(ex.u.components == 2);
  // u1 = Z1 slot 0 verbatim
  for (std::int64_t i = 0; i < grid.cell_count(); ++i)
    CHECK(ex.u.component(0)[i] == z1.component(0)[i]);
  // u2 = c2 . Z1 + psi2 = u1_x on the mask (exact cancellation of the
  // regularization term)
  for (std::int64_t i = 0; i < grid.cell_count(); ++i)
    if (mask[i])
      CHECK(ex.u.component(1)[i] == doctest::Approx(z1.component(2)[i]).epsilon(1e-12));
}

TEST_CASE("oracle error decreases over three grid doublings") {
  double prev = 1e300;
  for (const int n : {32, 64, 128}) {
    auto s = make(kReactionText, std::nullopt, n);
    SolverConfig config;
    config.rel_tolerance = 1e-10;
    config.max_iterations = 200;
    Transformer transformer(s.grid);
    const auto sol =
        picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, config, transformer);
    REQUIRE(sol.report.converged);
    CHECK(sol.report.residual_bound_ok);
    const IndicatorMask mask(s.grid);
    const auto extracted = extract_solution(sol.z1, s.problem, s.plan, s.params, s.grid, mask);
    const auto oracle = ode_pointwise(Expression::parse("u1"), s.problem.initial_exprs[0], s.grid);
    const double err = compare_to_oracle(extracted.u, 0, oracle, s.grid).l2;
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("finite-difference coherence of the u_x slot on a converged run") {
  auto s = make(kReactionText, std::nullopt, 64);
  SolverConfig config;
  config.rel_tolerance = 1e-10;
  config.max_iterations = 100;
  Transformer transformer(s.grid);
  const auto sol = picard_solve(s.kernels, s.problem, s.plan, s.params, s.grid, config, transformer);
  REQUIRE(sol.report.converged);
  // centered differences of the u slot vs the u_x slot, interior cells away
  // from the spatial faces
  double err = 0, ref = 0;
  const double dx = s.grid.spacing(1);
  for (int it = 0; it < s.grid.resolution(0); ++it)
    for (int ix = 2; ix < s.grid.resolution(1) - 2; ++ix) {
      const std::int64_t cell = it * s.grid.stride(0) + ix;
      const double fd = (sol.z1.component(0)[cell + 1] - sol.z1.component(0)[cell - 1]) / (2 * dx);
      const double slot = sol.z1.component(1)[cell];
      err += (fd - slot) * (fd - slot);
      ref += slot * slot;
    }
  const double rel = std::sqrt(err / ref);
  CHECK(rel < 20.0 * dx + 10 * config.rel_tolerance);
}
