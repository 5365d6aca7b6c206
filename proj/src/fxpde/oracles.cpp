#include "fxpde/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fxpde {

namespace {

double eval1(const Expression& expr, const char* var, double value) {
  std::vector<double> vals(expr.variables().size(), 0.0);
  for (std::size_t v = 0; v < expr.variables().size(); ++v)
    if (expr.variables()[v] == var) vals[v] = value;
  EvalEnv env{vals};
  const double out = expr.eval(env);
  if (env.fault) throw std::runtime_error(std::string("oracle data fault: ") + env.fault_what);
  return out;
}

void require_1d(const SpaceTimeGrid& grid, const char* who) {
  if (grid.axes() != 2) throw std::invalid_argument(std::string(who) + " supports 1D grids only");
}

}  // namespace

OracleResult characteristics_transport(const Expression& u0, double speed,
                                       const Expression& inflow, const SpaceTimeGrid& grid) {
  require_1d(grid, "characteristics_transport");
  OracleResult out;
  out.method = "characteristics/transport";
  out.u_ref = FieldArray::zeros(grid, 1);
  out.validity.assign(static_cast<std::size_t>(grid.cell_count()), 0);
  const double length = grid.extent(1);
  auto dst = out.u_ref.component(0);
  for (int it = 0; it < grid.resolution(0); ++it) {
    const double t = grid.coord(0, it);
    for (int ix = 0; ix < grid.resolution(1); ++ix) {
      const double x = grid.coord(1, ix);
      const double foot = x - speed * t;
      const std::int64_t cell = it * grid.stride(0) + ix;
      double v;
      if (foot >= 0.0 && foot <= length) {
        v = eval1(u0, "x", foot);
      } else if (speed > 0) {
        v = eval1(inflow, "t", t - x / speed);  // trace back to x = 0
      } else if (speed < 0) {
        v = eval1(inflow, "t", t - (x - length) / speed);  // x = L face
      } else {
        v = eval1(u0, "x", x);
      }
      dst[cell] = v;
      out.validity[static_cast<std::size_t>(cell)] = 1;
    }
  }
  return out;
}

double burgers_shock_time(const Expression& u0, double extent) {
  const int n = 20001;
  double max_slope = 0;
  double prev = eval1(u0, "x", 0.0);
  for (int i = 1; i < n; ++i) {
    const double x = extent * i / (n - 1);
    const double cur = eval1(u0, "x", x);
    max_slope = std::max(max_slope, -(cur - prev) / (extent / (n - 1)));
    prev = cur;
  }
  if (max_slope <= 0) return std::numeric_limits<double>::infinity();
  return 1.0 / max_slope;
}

OracleResult characteristics_burgers(const Expression& u0, const SpaceTimeGrid& grid) {
  require_1d(grid, "characteristics_burgers");
  OracleResult out;
  out.method = "characteristics/burgers";
  out.u_ref = FieldArray::zeros(grid, 1);
  out.validity.assign(static_cast<std::size_t>(grid.cell_count()), 0);
  const double t_shock = burgers_shock_time(u0, grid.extent(1));
  const double t_valid = 0.9 * t_shock;

  // global speed bounds for the foot bracket
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  for (int i = 0; i <= 4000; ++i) {
    const double v = eval1(u0, "x", -0.5 * grid.extent(1) + 2.0 * grid.extent(1) * i / 4000.0);
    umin = std::min(umin, v);
    umax = std::max(umax, v);
  }

  auto dst = out.u_ref.component(0);
  for (int it = 0; it < grid.resolution(0); ++it) {
    const double t = grid.coord(0, it);
    if (t > t_valid) continue;  // masked invalid
    for (int ix = 0; ix < grid.resolution(1); ++ix) {
      const double x = grid.coord(1, ix);
      const std::int64_t cell = it * grid.stride(0) + ix;
      // solve g(x0) = x0 + u0(x0) t - x = 0 by bisection on a bracket
      double lo = x - umax * t - 1e-9, hi = x - umin * t + 1e-9;
      auto g = [&](double x0) { return x0 + eval1(u0, "x", x0) * t - x; };
      double glo = g(lo), ghi = g(hi);
      if (glo * ghi > 0) continue;  // non-bracketing: cell stays invalid
      for (int step = 0; step < 100; ++step) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (glo * gm <= 0) {
          hi = mid;
          ghi = gm;
        } else {
          lo = mid;
          glo = gm;
        }
      }
      dst[cell] = eval1(u0, "x", 0.5 * (lo + hi));
      out.validity[static_cast<std::size_t>(cell)] = 1;
    }
  }
  return out;
}

OracleResult ode_pointwise(const Expression& f_of_u, const Expression& u0,
                           const SpaceTimeGrid& grid) {
  for (const auto& v : f_of_u.variables())
    if (v != "u1") throw std::invalid_argument("ode_pointwise needs f = f(u1)");
  OracleResult out;
  out.method = "ode/rk4";
  out.u_ref = FieldArray::zeros(grid, 1);
  out.validity.assign(static_cast<std::size_t>(grid.cell_count()), 0);

  const int dim = grid.axes() - 1;
  std::int64_t spatial_cells = 1;
  for (int a = 1; a <= dim; ++a) spatial_cells *= grid.resolution(a);

  auto f = [&](double u) {
    std::vector<double> vals(f_of_u.variables().size(), u);
    EvalEnv env{vals};
    const double v = f_of_u.eval(env);
    return env.fault ? std::numeric_limits<double>::quiet_NaN() : v;
  };

  const double dt = grid.spacing(0);
  const int substeps = 10;  // dt_sub = dt/10
  auto dst = out.u_ref.component(0);
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  for (std::int64_t s = 0; s < spatial_cells; ++s) {
    double coords[4] = {0, 0, 0, 0};
    std::int64_t spatial_flat = 0;
    for (int a = 0; a < dim; ++a) {
      coords[a] = grid.coord(a + 1, idx[static_cast<std::size_t>(a)]);
      spatial_flat += idx[static_cast<std::size_t>(a)] * grid.stride(a + 1);
    }
    std::vector<double> vals(u0.variables().size(), 0.0);
    for (std::size_t v = 0; v < u0.variables().size(); ++v) {
      if (u0.variables()[v] == "x") vals[v] = coords[0];
      if (u0.variables()[v] == "y") vals[v] = coords[1];
      if (u0.variables()[v] == "z") vals[v] = coords[2];
    }
    EvalEnv env{vals};
    double u = u0.eval(env);
    bool alive = !env.fault;
    double t = 0;
    for (int itc = 0; itc < grid.resolution(0); ++itc) {
      const double target = grid.coord(0, itc);
      if (alive) {
        const int n = std::max(1, static_cast<int>(std::ceil((target - t) / (dt / substeps))));
        const double h = (target - t) / n;
        for (int stp = 0; stp < n && alive; ++stp) {
          const double k1 = f(u);
          const double k2 = f(u + 0.5 * h * k1);
          const double k3 = f(u + 0.5 * h * k2);
          const double k4 = f(u + h * k3);
          u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
          if (!std::isfinite(u) || std::abs(u) > 1e12) alive = false;  // blow-up
        }
        t = target;
      }
      const std::int64_t cell = itc * grid.stride(0) + spatial_flat;
      if (alive) {
        dst[cell] = u;
        out.validity[static_cast<std::size_t>(cell)] = 1;
      }
    }
    for (int a = dim - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < grid.resolution(a + 1)) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return out;
}

FieldArray duhamel_scalar(const FieldArray& source, double a, const std::array<double, 3>& b,
                          const SpaceTimeGrid& grid) {
  if (!(a < 0)) throw std::invalid_argument("duhamel_scalar requires a < 0");
  require_1d(grid, "duhamel_scalar");
  const double bx = b[0];
  const double dt = grid.spacing(0);
  const double dx = grid.spacing(1);
  auto src = source.component(0);

  // linear interpolation of the interior source, zero outside the box
  auto sample = [&](double x, double t) -> double {
    if (t < 0 || t > grid.extent(0) || x < 0 || x > grid.extent(1)) return 0.0;
    const double ft = t / dt - 0.5;
    const double fx = x / dx - 0.5;
    const int jt = static_cast<int>(std::floor(ft));
    const int jx = static_cast<int>(std::floor(fx));
    const double wt = ft - jt;
    const double wx = fx - jx;
    double acc = 0;
    for (int dt_i = 0; dt_i < 2; ++dt_i)
      for (int dx_i = 0; dx_i < 2; ++dx_i) {
        const int tt = jt + dt_i, xx = jx + dx_i;
        if (tt < 0 || tt >= grid.resolution(0) || xx < 0 || xx >= grid.resolution(1)) continue;
        const double w = (dt_i ? wt : 1 - wt) * (dx_i ? wx : 1 - wx);
        acc += w * src[tt * grid.stride(0) + xx];
      }
    return acc;
  };

  FieldArray out = FieldArray::zeros(grid, 1);
  auto dst = out.component(0);
  const double ds = dt / 4.0;
  for (int it = 0; it < grid.resolution(0); ++it) {
    const double t = grid.coord(0, it);
    const int nseg = std::max(1, static_cast<int>(std::ceil(t / ds)));
    const double h = t / nseg;
    for (int ix = 0; ix < grid.resolution(1); ++ix) {
      const double x = grid.coord(1, ix);
      double acc = 0.5 * (std::exp(0.0) * sample(x, t) +
                          std::exp(a * t) * sample(x + bx * t, 0.0));
      for (int k = 1; k < nseg; ++k) {
        const double s = k * h;
        acc += std::exp(a * s) * sample(x + bx * s, t - s);
      }
      dst[it * grid.stride(0) + ix] = acc * h;
    }
  }
  return out;
}

namespace {

OracleResult fd_transport_like(const ProblemSpec& problem, const SpaceTimeGrid& grid,
                               bool burgers) {
  // first-order upwind; the grid dt itself must satisfy the stability bound
  require_1d(grid, "finite_difference_reference");
  const double dt = grid.spacing(0);
  const double dx = grid.spacing(1);
  const int nx = grid.resolution(1);

  // initial data and wave-speed bound
  std::vector<double> u(static_cast<std::size_t>(nx));
  double speed = 1.0;
  for (int i = 0; i < nx; ++i)
    u[static_cast<std::size_t>(i)] = eval1(problem.initial_exprs[0], "x", grid.coord(1, i));
  if (burgers) {
    speed = 0;
    for (double v : u) speed = std::max(speed, std::abs(v));
  }
  const double cfl = speed * dt / dx;
  if (cfl > 1.0)
    throw CflError("upwind stability requires |c| dt/dx <= 1; need dt <= " +
                       std::to_string(dx / speed),
                   dx / speed);

  OracleResult out;
  out.method = burgers ? "fd/upwind-burgers" : "fd/upwind-transport";
  out.scheme_order = 1;
  out.cfl = cfl;
  out.u_ref = FieldArray::zeros(grid, 1);
  out.validity.assign(static_cast<std::size_t>(grid.cell_count()), 0);
  auto dst = out.u_ref.component(0);

  const auto& left = problem.boundary_exprs.at(Face{1, false})[0];
  const auto& right = problem.boundary_exprs.at(Face{1, true})[0];

  // march from t = 0 to cell centers; first half step reaches t_0 = dt/2
  double t = 0;
  std::vector<double> next(u.size());
  for (int itc = 0; itc < grid.resolution(0); ++itc) {
    const double target = grid.coord(0, itc);
    while (t < target - 1e-12) {
      const double h = std::min(dt, target - t);
      for (int i = 0; i < nx; ++i) {
        const double ui = u[static_cast<std::size_t>(i)];
        const double c = burgers ? ui : 1.0;
        double grad;
        if (c >= 0)
          grad = (ui - (i > 0 ? u[static_cast<std::size_t>(i - 1)] : eval1(left, "t", t))) / dx;
        else
          grad = ((i + 1 < nx ? u[static_cast<std::size_t>(i + 1)] : eval1(right, "t", t)) - ui) / dx;
        next[static_cast<std::size_t>(i)] = ui - h * c * grad;
      }
      u.swap(next);
      t += h;
    }
    for (int i = 0; i < nx; ++i) {
      const std::int64_t cell = itc * grid.stride(0) + i;
      dst[cell] = u[static_cast<std::size_t>(i)];
      out.validity[static_cast<std::size_t>(cell)] = 1;
    }
  }
  return out;
}

OracleResult fd_reaction(const ProblemSpec& problem, const SpaceTimeGrid& grid) {
  require_1d(grid, "finite_difference_reference");
  const double dt = grid.spacing(0);
  const int nx = grid.resolution(1);
  const auto& f_expr = problem.system.rhs_exprs[0];

  // stiffness bound from the initial-data range (with margin)
  double umin = 0, umax = 0;
  {
    std::vector<double> u0(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i)
      u0[static_cast<std::size_t>(i)] = eval1(problem.initial_exprs[0], "x", grid.coord(1, i));
    umin = *std::min_element(u0.begin(), u0.end());
    umax = *std::max_element(u0.begin(), u0.end());
  }
  const double span = std::max(1.0, 4 * (std::abs(umin) + std::abs(umax)));
  double lips = 0;
  for (int i = 0; i <= 200; ++i) {
    const double u = -span + 2 * span * i / 200.0;
    const double h = 1e-4 * span;
    const double d = (eval1(f_expr, "u1", u + h) - eval1(f_expr, "u1", u - h)) / (2 * h);
    lips = std::max(lips, std::abs(d));
  }
  if (lips * dt > 0.5)
    throw CflError("forward Euler stability requires L dt <= 0.5; need dt <= " +
                       std::to_string(0.5 / lips),
                   0.5 / lips);

  OracleResult out;
  out.method = "fd/forward-euler-reaction";
  out.scheme_order = 1;
  out.cfl = lips * dt;
  out.u_ref = FieldArray::zeros(grid, 1);
  out.validity.assign(static_cast<std::size_t>(grid.cell_count()), 0);
  auto dst = out.u_ref.component(0);

  std::vector<double> u(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i)
    u[static_cast<std::size_t>(i)] = eval1(problem.initial_exprs[0], "x", grid.coord(1, i));
  double t = 0;
  for (int itc = 0; itc < grid.resolution(0); ++itc) {
    const double target = grid.coord(0, itc);
    while (t < target - 1e-12) {
      const double h = std::min(dt, target - t);
      for (auto& v : u) v += h * eval1(f_expr, "u1", v);
      t += h;
    }
    for (int i = 0; i < nx; ++i) {
      const std::int64_t cell = itc * grid.stride(0) + i;
      dst[cell] = u[static_cast<std::size_t>(i)];
      out.validity[static_cast<std::size_t>(cell)] = 1;
    }
  }
  return out;
}

OracleResult fd_heat(const ProblemSpec& problem, const SpaceTimeGrid& grid) {
  require_1d(grid, "finite_difference_reference");
  const double dt = grid.spacing(0);
  const double dx = grid.spacing(1);
  const int nx = grid.resolution(1);
  if (dt > 0.5 * dx * dx)
    throw CflError("FTCS stability requires dt <= dx^2/2; need dt <= " +
                       std::to_string(0.5 * dx * dx),
                   0.5 * dx * dx);

  OracleResult out;
  out.method = "fd/ftcs-heat";
  out.scheme_order = 1;  // first order in time
  out.cfl = dt / (dx * dx);
  out.u_ref = FieldArray::zeros(grid, 1);
  out.validity.assign(static_cast<std::size_t>(grid.cell_count()), 0);
  auto dst = out.u_ref.component(0);

  const auto& left = problem.boundary_exprs.at(Face{1, false})[0];
  const auto& right = problem.boundary_exprs.at(Face{1, true})[0];
  std::vector<double> u(static_cast<std::size_t>(nx)), next(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i)
    u[static_cast<std::size_t>(i)] = eval1(problem.initial_exprs[0], "x", grid.coord(1, i));
  double t = 0;
  for (int itc = 0; itc < grid.resolution(0); ++itc) {
    const double target = grid.coord(0, itc);
    while (t < target - 1e-12) {
      const double h = std::min(dt, target - t);
      for (int i = 0; i < nx; ++i) {
        // ghost values from the Dirichlet faces (cell-centered grid)
        const double um = i > 0 ? u[static_cast<std::size_t>(i - 1)]
                                : 2 * eval1(left, "t", t) - u[0];
        const double up = i + 1 < nx ? u[static_cast<std::size_t>(i + 1)]
                                     : 2 * eval1(right, "t", t) - u[static_cast<std::size_t>(nx - 1)];
        next[static_cast<std::size_t>(i)] =
            u[static_cast<std::size_t>(i)] +
            h / (dx * dx) * (up - 2 * u[static_cast<std::size_t>(i)] + um);
      }
      u.swap(next);
      t += h;
    }
    for (int i = 0; i < nx; ++i) {
      const std::int64_t cell = itc * grid.stride(0) + i;
      dst[cell] = u[static_cast<std::size_t>(i)];
      out.validity[static_cast<std::size_t>(cell)] = 1;
    }
  }
  return out;
}

}  // namespace

OracleResult finite_difference_reference(const ProblemSpec& problem, const SpaceTimeGrid& grid) {
  if (problem.name == "transport") return fd_transport_like(problem, grid, false);
  if (problem.name == "burgers") return fd_transport_like(problem, grid, true);
  if (problem.name == "reaction_linear" || problem.name == "reaction_cubic")
    return fd_reaction(problem, grid);
  if (problem.name == "heat_reduced_1d") return fd_heat(problem, grid);
  throw std::invalid_argument("no finite-difference reference for problem '" + problem.name + "'");
}

ErrorNorms compare_to_oracle(const FieldArray& u, int component, const OracleResult& oracle,
                             const SpaceTimeGrid& grid) {
  ErrorNorms out;
  double err_sq = 0, ref_sq = 0;
  std::int64_t valid = 0;
  auto uc = u.component(component);
  auto rc = oracle.u_ref.component(0);
  for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
    if (!grid.is_interior(i)) continue;
    if (!oracle.validity[static_cast<std::size_t>(i)]) continue;
    ++valid;
    const double d = uc[i] - rc[i];
    err_sq += d * d;
    ref_sq += rc[i] * rc[i];
    out.linf = std::max(out.linf, std::abs(d));
  }
  out.valid_fraction = static_cast<double>(valid) / static_cast<double>(grid.interior_count());
  out.l2 = ref_sq > 0 ? std::sqrt(err_sq / ref_sq) : std::sqrt(err_sq);
  return out;
}

}  // namespace fxpde
