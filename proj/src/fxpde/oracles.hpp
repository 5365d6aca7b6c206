#pragma once

#include "fxpde/problem.hpp"
#include "fxpde/transform.hpp"

namespace fxpde {

/// Reference solution with a validity mask over the interior cells (1 =
/// comparable). Oracles never share code with the spectral path.
struct OracleResult {
  FieldArray u_ref;                    // padded layout, interior cells filled
  std::vector<std::uint8_t> validity;  // per padded cell (interior subset)
  std::string method;
  double cfl = 0;                      // FD schemes only
  int scheme_order = 0;
};

/// u(x,t) = u0(x - c t) where the characteristic foot stays inside, else the
/// inflow trace carried from the upstream boundary. 1D only.
OracleResult characteristics_transport(const Expression& u0, double speed,
                                       const Expression& inflow, const SpaceTimeGrid& grid);

/// Implicit pre-shock solution of u_t + u u_x = 0: solves x0 + u0(x0) t = x
/// by safeguarded bisection; cells past 0.9 * t_shock are masked invalid.
OracleResult characteristics_burgers(const Expression& u0, const SpaceTimeGrid& grid);
/// 1 / max(-u0'), estimated by dense sampling.
double burgers_shock_time(const Expression& u0, double extent);

/// Pointwise RK4 time integration of u_t = f(u) per spatial column, substep
/// at most dt/10; blow-up (|u| > 1e12) masks later times invalid.
OracleResult ode_pointwise(const Expression& f_of_u, const Expression& u0,
                           const SpaceTimeGrid& grid);

/// Characteristic-line quadrature (x,t) -> int_0^t e^{a s} source(x + b s,
/// t - s) ds by the trapezoid rule with linear interpolation; the source is
/// taken as zero outside the interior box. Scalar plans with a < 0.
FieldArray duhamel_scalar(const FieldArray& source, double a, const std::array<double, 3>& b,
                          const SpaceTimeGrid& grid);

/// Classic finite-difference references for the builtin problems: upwind
/// (transport, burgers), forward Euler (reaction), FTCS (heat_reduced_1d,
/// run on the unreduced equation). Refuses grids violating the scheme's
/// stability limit.
struct CflError : std::runtime_error {
  CflError(const std::string& what, double required_dt)
      : std::runtime_error(what), required_dt(required_dt) {}
  double required_dt;
};
OracleResult finite_difference_reference(const ProblemSpec& problem, const SpaceTimeGrid& grid);

/// Relative errors over interior cells where validity = 1.
struct ErrorNorms {
  double l2 = 0;
  double linf = 0;
  double valid_fraction = 0;
};
ErrorNorms compare_to_oracle(const FieldArray& u, int component, const OracleResult& oracle,
                             const SpaceTimeGrid& grid);

}  // namespace fxpde
