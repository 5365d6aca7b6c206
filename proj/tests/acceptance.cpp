// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured numbers. Criteria 5-8 solve the shipped problems
// end to end against independent oracles; criterion 10 replays them through
// the CLI and compares artifacts byte for byte.

#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

#include "fxpde/fixedpoint.hpp"
#include "fxpde/io.hpp"
#include "fxpde/oracles.hpp"

using namespace fxpde;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report_line(int criterion, bool pass, const std::string& detail, double seconds) {
  std::cout << "[criterion " << criterion << "] " << (pass ? "PASS" : "FAIL") << " — " << detail
            << "  (" << seconds << " s)\n";
}

struct SolveRun {
  ProblemSpec problem;
  ReductionPlan plan;
  ParameterSet params;
  SpaceTimeGrid grid;
  KernelPair kernels;
  PicardSolution solution;
  ExtractedSolution extracted;
};

SolveRun solve_builtin(const std::string& name, int n, const SolverConfig* override_cfg = nullptr,
                       const ProblemSpec* override_problem = nullptr) {
  SolveRun r;
  r.problem = override_problem ? *override_problem : builtin(name);
  r.plan = build_plan(r.problem.system);
  r.params = resolve_parameters(r.problem, r.plan);
  r.grid = build_grid(r.problem.domain, {n, n}, {r.problem.pad_time, r.problem.pad_space});
  const auto causality = validate_parameters(r.plan, r.params);
  REQUIRE(causality.causal);
  Transformer transformer(r.grid);
  const auto spectra = boundary_spectra(sample_boundary_data(r.problem, r.grid), r.grid);
  r.kernels = synthesize_kernels(r.plan, r.params, spectra, r.grid, 0.0, causality, &transformer);
  const SolverConfig cfg = override_cfg ? *override_cfg : r.problem.solver;
  r.solution = picard_solve(r.kernels, r.problem, r.plan, r.params, r.grid, cfg, transformer);
  const IndicatorMask mask(r.grid);
  r.extracted = extract_solution(r.solution.z1, r.problem, r.plan, r.params, r.grid, mask);
  return r;
}

std::mt19937_64 rng(20260810);

// quadrature oracle for criterion 3 (same scheme as the unit test, kept
// separate so the acceptance binary stands alone)
std::complex<double> jordan_quadrature(std::complex<double> lambda, int n, double t) {
  const double R = 2e4;
  auto f = [&](double xi) {
    return std::pow(std::complex<double>(lambda.real(), lambda.imag() + xi), -n) *
           std::complex<double>(std::cos(t * xi), std::sin(t * xi));
  };
  struct Quad {
    std::function<std::complex<double>(double)> f;
    std::complex<double> run(double a, double b, std::complex<double> fa,
                             std::complex<double> fb, std::complex<double> fm, double eps,
                             int depth) {
      const double m = 0.5 * (a + b);
      const std::complex<double> flm = f(0.5 * (a + m));
      const std::complex<double> frm = f(0.5 * (m + b));
      const std::complex<double> s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
      const std::complex<double> sl = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const std::complex<double> sr = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth >= 28 || std::abs(sl + sr - s) < 15 * eps)
        return sl + sr + (sl + sr - s) / 15.0;
      return run(a, m, fa, fm, flm, eps / 2, depth + 1) +
             run(m, b, fm, fb, frm, eps / 2, depth + 1);
    }
  };
  const double period = (std::abs(t) > 1e-12) ? 2 * std::numbers::pi / std::abs(t) : 2 * R;
  const double panel = std::max(std::min(period, 2 * R), 2 * R / 4e5);
  Quad q{f};
  std::complex<double> total = 0;
  double a = -R;
  while (a < R - 1e-12) {
    const double b = std::min(R, a + panel);
    total += q.run(a, b, f(a), f(b), f(0.5 * (a + b)), 1e-11, 0);
    a = b;
  }
  if (std::abs(t) > 1e-12) {
    const std::complex<double> I(0, 1);
    const std::complex<double> eup = std::exp(I * t * R), edn = std::exp(-I * t * R);
    const std::complex<double> up = I * R + lambda, dn = -I * R + lambda;
    std::complex<double> jup = -std::pow(up, -(n + 2)) * eup / (I * t);
    std::complex<double> jdn = std::pow(dn, -(n + 2)) * edn / (I * t);
    jup = -std::pow(up, -(n + 1)) * eup / (I * t) + ((n + 1) / t) * jup;
    jdn = std::pow(dn, -(n + 1)) * edn / (I * t) + ((n + 1) / t) * jdn;
    jup = -std::pow(up, -n) * eup / (I * t) + (n / t) * jup;
    jdn = std::pow(dn, -n) * edn / (I * t) + (n / t) * jdn;
    total += jup + jdn;
  }
  return total / (2 * std::numbers::pi);
}

std::string cli_binary() {
  const char* bin = std::getenv("FXPDE_BIN");
  return bin ? bin : "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("criterion 1: transform fidelity") {
  Timer timer;
  DomainSpec d;
  d.spatial_dim = 1;
  d.extents = {1.0, 0, 0};
  d.horizon = 1.0;
  d.components = 1;
  const auto grid = build_grid(d, {16, 16}, 2.0);
  const IndicatorMask mask(grid);
  std::uniform_real_distribution<double> dist(-1, 1);
  double worst_plancherel = 0, worst_roundtrip = 0;
  for (int trial = 0; trial < 100; ++trial) {
    FieldArray f = FieldArray::zeros(grid, 1);
    for (auto& v : f.values) v = dist(rng);
    FieldArray fm = f;
    mask.apply(fm);
    const auto spec = forward_transform(f, mask, grid);
    const double lhs = spectral_norm(spec, grid);
    const double rhs = grid_norm(fm, grid);
    worst_plancherel = std::max(worst_plancherel, std::abs(lhs - rhs) / rhs);
    const auto back = inverse_transform(spec, grid);
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < fm.values.size(); ++i) {
      err = std::max(err, std::abs(back.values[i] - fm.values[i]));
      scale = std::max(scale, std::abs(fm.values[i]));
    }
    worst_roundtrip = std::max(worst_roundtrip, err / scale);
  }
  const bool pass = worst_plancherel <= 1e-10 && worst_roundtrip <= 1e-12 && timer.seconds() < 10;
  report_line(1, pass,
              "plancherel " + format_double(worst_plancherel) + ", roundtrip " +
                  format_double(worst_roundtrip),
              timer.seconds());
  CHECK(worst_plancherel <= 1e-10);
  CHECK(worst_roundtrip <= 1e-12);
  CHECK(timer.seconds() < 10);
}

TEST_CASE("criterion 2: symbol correctness") {
  Timer timer;
  // scalar closed forms over 1e4 random frequencies
  EquationSystem sys;
  sys.m = 1;
  sys.dim = 3;
  sys.lhs = {{SlotKind::TimeDeriv, 0}};
  sys.rhs_order = canonical_rhs_order(1, 3, sys.lhs);
  sys.rhs_exprs.push_back(Expression::parse("u1"));
  const auto plan = build_plan(sys);
  std::uniform_real_distribution<double> pdist(-2, 2), xdist(-30, 30);
  double worst_inv = 0, worst_det = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const double abcd[4] = {pdist(rng) - 2.1, pdist(rng), pdist(rng), pdist(rng)};
    auto params = ParameterSet::scalars(abcd, 3);
    const double xi[4] = {xdist(rng), xdist(rng), xdist(rng), xdist(rng)};
    const auto sym = assemble_symbol(plan, params, xi);
    const auto inv = invert_symbol(sym.B1, default_eps_sing(sym.B1));
    REQUIRE(!inv.singular);
    const auto closed = scalar_symbol_inverse(abcd, xi);
    const auto a1 = scalar_symbol_det(abcd, xi);
    worst_inv = std::max(worst_inv, (inv.inverse - closed).cwiseAbs().maxCoeff() /
                                        closed.cwiseAbs().maxCoeff());
    worst_det = std::max(worst_det, std::abs(inv.det - a1) / std::abs(a1));
  }
  // random systems m <= 4 against the hand-rolled LU oracle
  auto lu_det = [](std::vector<std::vector<std::complex<double>>> a) {
    std::complex<double> det = 1.0;
    for (std::size_t col = 0; col < a.size(); ++col) {
      std::size_t pivot = col;
      for (std::size_t row = col + 1; row < a.size(); ++row)
        if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
      if (std::abs(a[pivot][col]) == 0.0) return std::complex<double>(0);
      if (pivot != col) {
        std::swap(a[pivot], a[col]);
        det = -det;
      }
      det *= a[col][col];
      for (std::size_t row = col + 1; row < a.size(); ++row) {
        const auto f = a[row][col] / a[col][col];
        for (std::size_t k = col; k < a.size(); ++k) a[row][k] -= f * a[col][k];
      }
    }
    return det;
  };
  std::uniform_int_distribution<int> mdist(1, 4), ddist(1, 3);
  double worst_lu = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = mdist(rng), dim = ddist(rng);
    std::vector<SlotId> slots;
    for (int kind = 0; kind < 2 + dim; ++kind)
      for (int c = 0; c < m; ++c)
        slots.push_back({kind == 0   ? SlotKind::TimeDeriv
                         : kind == 1 ? SlotKind::Value
                                     : static_cast<SlotKind>(kind),
                         c});
    std::shuffle(slots.begin(), slots.end(), rng);
    EquationSystem rsys;
    rsys.m = m;
    rsys.dim = dim;
    rsys.lhs.assign(slots.begin(), slots.begin() + m);
    rsys.rhs_order = canonical_rhs_order(m, dim, rsys.lhs);
    for (int j = 0; j < m; ++j) rsys.rhs_exprs.push_back(Expression::parse("t"));
    const auto rplan = build_plan(rsys);
    auto params = ParameterSet::zeros(m, 1 + dim);
    for (auto& block : params.C)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) block(i, j) = pdist(rng);
    std::vector<double> xi(static_cast<std::size_t>(1 + dim));
    for (auto& v : xi) v = xdist(rng);
    const auto sym = assemble_symbol(rplan, params, xi);
    std::vector<std::vector<std::complex<double>>> rows(static_cast<std::size_t>(sym.B1.rows()));
    for (Eigen::Index i = 0; i < sym.B1.rows(); ++i)
      for (Eigen::Index j = 0; j < sym.B1.cols(); ++j)
        rows[static_cast<std::size_t>(i)].push_back(sym.B1(i, j));
    const auto ref = lu_det(rows);
    const auto det = invert_symbol(sym.B1, 0.0).det;
    worst_lu = std::max(worst_lu, std::abs(det - ref) / (1.0 + std::abs(ref)));
  }
  const bool pass = worst_inv <= 1e-12 && worst_det <= 1e-12 && worst_lu <= 1e-10 &&
                    timer.seconds() < 30;
  report_line(2, pass,
              "closed-form inverse " + format_double(worst_inv) + ", det " +
                  format_double(worst_det) + ", LU oracle " + format_double(worst_lu),
              timer.seconds());
  CHECK(worst_inv <= 1e-12);
  CHECK(worst_det <= 1e-12);
  CHECK(worst_lu <= 1e-10);
  CHECK(timer.seconds() < 30);
}

TEST_CASE("criterion 3: causality") {
  Timer timer;
  // closed form vs adaptive quadrature
  const std::complex<double> lambdas[3] = {{0.5, 0}, {1.0, 0}, {2.0, 1.0}};
  std::vector<double> ts = {-1.0, -0.5, -0.25, -0.1};
  for (int i = 0; i < 16; ++i) ts.push_back(0.08 + i * (3.0 - 0.08) / 15.0);
  double worst_quad = 0;
  for (const auto lambda : lambdas)
    for (int n = 1; n <= 3; ++n)
      for (const double t : ts)
        worst_quad = std::max(worst_quad, std::abs(jordan_inverse_transform(lambda, n, t) -
                                                   jordan_quadrature(lambda, n, t)));

  // kernel support for the shipped problems under their solve parameters
  double worst_mass = 0, worst_margin = 1e300;
  for (const char* name : {"transport", "reaction_linear", "burgers", "heat_reduced_1d"}) {
    ProblemSpec p = builtin(name);
    const auto plan = build_plan(p.system);
    const auto params = resolve_parameters(p, plan);
    const auto grid = build_grid(p.domain, {64, 64}, {8.0, 2.0});
    const auto causality = validate_parameters(plan, params);
    REQUIRE(causality.causal);
    const auto spectra = boundary_spectra(sample_boundary_data(p, grid), grid);
    const auto kernels = synthesize_kernels(plan, params, spectra, grid, 0.0, causality);
    const auto check = causality_check(kernels, grid);
    worst_mass = std::max(worst_mass, check.worst);
    worst_margin = std::min(worst_margin, check.threshold - check.worst);
    if (!check.pass) {
      report_line(3, false, std::string("kernel support failed for ") + name, timer.seconds());
      REQUIRE(check.pass);
    }
  }

  // anti-causal control: flip the decay sign and push it through anyway
  bool control_failed = false;
  {
    ProblemSpec p = builtin("reaction_linear");
    const auto plan = build_plan(p.system);
    const double abcd[2] = {+2.0, 0.0};
    auto params = ParameterSet::scalars(abcd, 1);
    const auto grid = build_grid(p.domain, {64, 64}, {8.0, 2.0});
    auto causality = validate_parameters(plan, params);
    REQUIRE(!causality.causal);
    causality.causal = true;  // validation disabled on purpose
    causality.margin = 2.0;
    const auto spectra = boundary_spectra(sample_boundary_data(p, grid), grid);
    const auto kernels = synthesize_kernels(plan, params, spectra, grid, 0.0, causality);
    const auto check = causality_check(kernels, grid);
    control_failed = !check.pass && check.worst > 0.5;
  }
  const bool pass = worst_quad <= 1e-6 && worst_margin > 0 && control_failed &&
                    timer.seconds() < 60;
  report_line(3, pass,
              "quadrature gap " + format_double(worst_quad) + ", worst kernel mass " +
                  format_double(worst_mass) + ", anti-causal control " +
                  (control_failed ? "fails as required" : "unexpectedly passed"),
              timer.seconds());
  CHECK(worst_quad <= 1e-6);
  CHECK(worst_margin > 0);
  CHECK(control_failed);
  CHECK(timer.seconds() < 60);
}

TEST_CASE("criterion 4: scalar duhamel equivalence") {
  Timer timer;
  const double a = -2.0, b = 0.5;
  double errs[2] = {0, 0};
  int slot = 0;
  for (const int n : {64, 128}) {
    DomainSpec d;
    d.spatial_dim = 1;
    d.extents = {1.0, 0, 0};
    d.horizon = 0.5;
    d.components = 1;
    const auto grid = build_grid(d, {n, n}, {8.0, 2.0});
    EquationSystem sys;
    sys.m = 1;
    sys.dim = 1;
    sys.lhs = {{SlotKind::TimeDeriv, 0}};
    sys.rhs_order = canonical_rhs_order(1, 1, sys.lhs);
    sys.rhs_exprs.push_back(Expression::parse("u1"));
    const auto plan = build_plan(sys);
    const double abcd[2] = {a, b};
    auto params = ParameterSet::scalars(abcd, 1);
    const auto causality = validate_parameters(plan, params);
    BoundarySpectra zero_spectra;
    for (int ax = 0; ax < 2; ++ax) zero_spectra.g.push_back(SpectralArray::zeros(grid, 1));
    Transformer transformer(grid);
    const auto kernels =
        synthesize_kernels(plan, params, zero_spectra, grid, 0.0, causality, &transformer);

    FieldArray source = FieldArray::zeros(grid, 1);
    for (int it = 0; it < grid.resolution(0); ++it)
      for (int ix = 0; ix < grid.resolution(1); ++ix)
        source.component(0)[it * grid.stride(0) + ix] =
            std::sin(std::numbers::pi * grid.coord(1, ix)) *
            std::sin(std::numbers::pi * grid.coord(0, it) / 0.5);
    const SpectralArray s_hat = transformer.forward_raw(source);
    SpectralArray prod = SpectralArray::zeros(grid, 1);
    for (std::int64_t i = 0; i < grid.cell_count(); ++i)
      prod.component(0)[i] = kernels.w2_hat.component(0)[i] * s_hat.component(0)[i];
    const FieldArray spectral = transformer.inverse(prod);
    const FieldArray ref = duhamel_scalar(source, a, {b, 0, 0}, grid);
    double err = 0, scale = 0;
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
      if (!grid.is_interior(i)) continue;
      const double dd = spectral.component(0)[i] - ref.component(0)[i];
      err += dd * dd;
      scale += ref.component(0)[i] * ref.component(0)[i];
    }
    errs[slot++] = std::sqrt(err / scale);
  }
  const bool pass = errs[1] <= 0.02 && errs[1] < errs[0] && timer.seconds() < 60;
  report_line(4, pass,
              "rel L2 at 64: " + format_double(errs[0]) + ", at 128: " + format_double(errs[1]),
              timer.seconds());
  CHECK(errs[1] <= 0.02);
  CHECK(errs[1] < errs[0]);
  CHECK(timer.seconds() < 60);
}

TEST_CASE("criterion 5: end-to-end transport") {
  Timer timer;
  std::vector<double> errors;
  for (const int n : {64, 128, 256}) {
    const auto run = solve_builtin("transport", n);
    REQUIRE(run.solution.report.converged);
    const auto oracle = characteristics_transport(
        run.problem.initial_exprs[0], 1.0, run.problem.boundary_exprs.at(Face{1, false})[0],
        run.grid);
    errors.push_back(compare_to_oracle(run.extracted.u, 0, oracle, run.grid).l2);
  }
  const bool monotone = errors[1] < errors[0] && errors[2] < errors[1];
  const bool pass = errors[2] <= 0.05 && monotone && timer.seconds() < 120;
  report_line(5, pass,
              "rel L2 64/128/256: " + format_double(errors[0]) + " / " +
                  format_double(errors[1]) + " / " + format_double(errors[2]),
              timer.seconds());
  CHECK(errors[2] <= 0.05);
  CHECK(monotone);
  CHECK(timer.seconds() < 120);
}

TEST_CASE("criterion 6: end-to-end reaction") {
  Timer timer;
  double err_linear, err_cubic, ratio_linear, ratio_cubic;
  {
    const auto run = solve_builtin("reaction_linear", 128);
    REQUIRE(run.solution.report.converged);
    const auto oracle =
        ode_pointwise(run.problem.system.rhs_exprs[0], run.problem.initial_exprs[0], run.grid);
    err_linear = compare_to_oracle(run.extracted.u, 0, oracle, run.grid).l2;
    ratio_linear = run.solution.report.contraction_ratio;
  }
  {
    const auto run = solve_builtin("reaction_cubic", 128);
    REQUIRE(run.solution.report.converged);
    const auto oracle =
        ode_pointwise(run.problem.system.rhs_exprs[0], run.problem.initial_exprs[0], run.grid);
    err_cubic = compare_to_oracle(run.extracted.u, 0, oracle, run.grid).l2;
    ratio_cubic = run.solution.report.contraction_ratio;
  }
  const bool pass = err_linear <= 0.05 && err_cubic <= 0.05 && ratio_linear < 1.0 &&
                    ratio_cubic < 1.0 && timer.seconds() < 120;
  report_line(6, pass,
              "rel L2 linear " + format_double(err_linear) + " (ratio " +
                  format_double(ratio_linear) + "), cubic " + format_double(err_cubic) +
                  " (ratio " + format_double(ratio_cubic) + ")",
              timer.seconds());
  CHECK(err_linear <= 0.05);
  CHECK(err_cubic <= 0.05);
  CHECK(ratio_linear < 1.0);
  CHECK(ratio_cubic < 1.0);
  CHECK(timer.seconds() < 120);
}

TEST_CASE("criterion 7: end-to-end burgers before the shock") {
  Timer timer;
  const auto run = solve_builtin("burgers", 256);
  REQUIRE(run.solution.report.converged);
  const auto oracle = characteristics_burgers(run.problem.initial_exprs[0], run.grid);
  const auto err = compare_to_oracle(run.extracted.u, 0, oracle, run.grid);
  const bool pass = err.l2 <= 0.05 && err.valid_fraction > 0.9 && timer.seconds() < 120;
  report_line(7, pass,
              "rel L2 " + format_double(err.l2) + " on valid fraction " +
                  format_double(err.valid_fraction) + ", iterations " +
                  std::to_string(run.solution.report.iterations),
              timer.seconds());
  CHECK(err.l2 <= 0.05);
  CHECK(timer.seconds() < 120);
}

TEST_CASE("criterion 8: general scenario (heat reduction)") {
  Timer timer;
  ProblemSpec p = builtin("heat_reduced_1d");
  const auto plan = build_plan(p.system);
  CHECK(plan.r == 1);
  REQUIRE(p.params.has_value());
  const auto causality = validate_parameters(plan, *p.params);
  CHECK(causality.causal);

  const auto run = solve_builtin("heat_reduced_1d", 128);
  REQUIRE(run.solution.report.converged);

  // FTCS reference on its own stability-limited grid, interpolated in time
  const double dx = run.grid.spacing(1);
  const int nt = static_cast<int>(std::ceil(run.grid.extent(0) / (0.4 * dx * dx)));
  const auto fd_grid = build_grid(p.domain, {nt, run.grid.resolution(1)}, 2.0);
  const auto fd = finite_difference_reference(p, fd_grid);
  double err = 0, ref = 0;
  for (int it = 0; it < run.grid.resolution(0); ++it) {
    const double t = run.grid.coord(0, it);
    const double f = t / fd_grid.spacing(0) - 0.5;
    const int j0 = std::max(0, std::min(fd_grid.resolution(0) - 2, static_cast<int>(std::floor(f))));
    const double w = std::clamp(f - j0, 0.0, 1.0);
    for (int ix = 0; ix < run.grid.resolution(1); ++ix) {
      const double ref_v = (1 - w) * fd.u_ref.component(0)[j0 * fd_grid.stride(0) + ix] +
                           w * fd.u_ref.component(0)[(j0 + 1) * fd_grid.stride(0) + ix];
      const double got = run.extracted.u.component(0)[it * run.grid.stride(0) + ix];
      err += (got - ref_v) * (got - ref_v);
      ref += ref_v * ref_v;
    }
  }
  const double rel = std::sqrt(err / ref);
  const bool pass = rel <= 0.10 && timer.seconds() < 120;
  report_line(8, pass, "r = 1 plan, causal margin " + format_double(causality.margin) +
                           ", rel L2 vs FTCS " + format_double(rel),
              timer.seconds());
  CHECK(rel <= 0.10);
  CHECK(timer.seconds() < 120);
}

TEST_CASE("criterion 9: exterior residual discriminates corrupted data") {
  Timer timer;
  const int n = 96;
  const auto clean = solve_builtin("transport", n);
  REQUIRE(clean.solution.report.converged);
  const double clean_exterior = clean.solution.report.exterior_residual;

  std::uniform_real_distribution<double> phase_dist(0, 2 * std::numbers::pi);
  int discriminated = 0;
  double worst_ratio = 1e300;
  for (int trial = 0; trial < 5; ++trial) {
    ProblemSpec corrupted = builtin("transport");
    const double phase = phase_dist(rng);
    // outflow face data forced to wrong values
    corrupted.boundary_exprs[Face{1, true}][0] = Expression::parse(
        "exp(-200*(0.6 - t)^2) + 0.5*sin(12.566370614359172*t + " + format_double(phase) + ")");
    const auto run = solve_builtin("transport", n, nullptr, &corrupted);
    const double bad_exterior = run.solution.report.exterior_residual;
    if (bad_exterior > clean_exterior) ++discriminated;
    worst_ratio = std::min(worst_ratio, bad_exterior / clean_exterior);
  }
  const bool pass = discriminated == 5 && timer.seconds() < 120;
  report_line(9, pass,
              "clean exterior " + format_double(clean_exterior) + ", worst corrupted ratio " +
                  format_double(worst_ratio) + "x, discriminated " +
                  std::to_string(discriminated) + "/5",
              timer.seconds());
  CHECK(discriminated == 5);
  CHECK(timer.seconds() < 120);
}

TEST_CASE("criterion 10: single-threaded determinism of criteria 5-8 artifacts") {
  Timer timer;
  const std::string bin = cli_binary();
  REQUIRE_MESSAGE(!bin.empty(), "FXPDE_BIN must point at the CLI binary");
  struct Case {
    const char* name;
    int resolution;
  };
  const Case cases[] = {{"transport", 256}, {"reaction_linear", 128},
                        {"burgers", 256},   {"heat_reduced_1d", 128}};
  bool all_identical = true;
  std::string detail;
  for (const auto& c : cases) {
    const fs::path base = fs::temp_directory_path() / ("fxpde_det_" + std::string(c.name));
    const fs::path out1 = base / "run1", out2 = base / "run2";
    fs::remove_all(base);
    for (const fs::path& out : {out1, out2}) {
      const std::string cmd = bin + " solve builtin:" + c.name + " --resolution " +
                              std::to_string(c.resolution) + "," + std::to_string(c.resolution) +
                              " --threads 1 --out " + out.string() + " > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      REQUIRE(WEXITSTATUS(status) == 0);
    }
    const bool same_field = slurp(out1 / "u.fxpd") == slurp(out2 / "u.fxpd");
    const bool same_csv = slurp(out1 / "u.csv") == slurp(out2 / "u.csv");
    if (!(same_field && same_csv)) {
      all_identical = false;
      detail += std::string(c.name) + " differs; ";
    }
    fs::remove_all(base);
  }
  if (detail.empty()) detail = "u.fxpd and u.csv byte-identical across reruns of all four problems";
  report_line(10, all_identical, detail, timer.seconds());
  CHECK(all_identical);
}
