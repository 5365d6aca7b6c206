#include "fxpde/fixedpoint.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace fxpde {

namespace {

// Per-equation binding of expression variables to Z1 columns / coordinates.
struct PsiBindings {
  struct VarSource {
    bool coord = false;
    int index = 0;  // coordinate axis (0..2 spatial, 3 time) or Z1 column
  };
  std::vector<std::vector<VarSource>> per_equation;
  std::vector<Eigen::VectorXd> beta_rows;  // linear part rows over Z1
};

PsiBindings make_bindings(const ProblemSpec& problem, const ReductionPlan& plan,
                          const ParameterSet& params) {
  PsiBindings b;
  const auto& sys = plan.system;
  b.per_equation.resize(static_cast<std::size_t>(sys.m));
  for (int j = 0; j < sys.m; ++j) {
    const auto& expr = sys.rhs_exprs[static_cast<std::size_t>(j)];
    auto& vars = b.per_equation[static_cast<std::size_t>(j)];
    vars.resize(expr.variables().size());
    for (std::size_t v = 0; v < expr.variables().size(); ++v) {
      const auto& nm = expr.variables()[v];
      if (nm == "x") vars[v] = {true, 0};
      else if (nm == "y") vars[v] = {true, 1};
      else if (nm == "z") vars[v] = {true, 2};
      else if (nm == "t") vars[v] = {true, 3};
      else vars[v] = {false, plan.slot_index(*parse_slot_name(nm))};
    }
    b.beta_rows.push_back(params.beta_row(j));
  }
  (void)problem;
  return b;
}

}  // namespace

PsiResult evaluate_psi(const FieldArray& z1, const ProblemSpec& problem,
                       const ReductionPlan& plan, const ParameterSet& params,
                       const SpaceTimeGrid& grid, const IndicatorMask& mask) {
  const int m = plan.m();
  const int zc = plan.zcols();
  if (z1.components != zc) throw std::invalid_argument("Z1 must carry one component per slot");
  PsiResult out;
  out.values = FieldArray::zeros(grid, m);
  const PsiBindings bindings = make_bindings(problem, plan, params);

  int idx[4];
  std::vector<double> slot_vals(static_cast<std::size_t>(zc));
  std::vector<double> coords(4, 0.0);
  for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
    if (!mask[i]) continue;
    grid.unflatten(i, idx);
    coords[3] = grid.coord(0, idx[0]);
    for (int a = 1; a < grid.axes(); ++a) coords[static_cast<std::size_t>(a - 1)] = grid.coord(a, idx[a]);
    for (int k = 0; k < zc; ++k) slot_vals[static_cast<std::size_t>(k)] = z1.component(k)[i];
    for (int j = 0; j < m; ++j) {
      const auto& expr = plan.system.rhs_exprs[static_cast<std::size_t>(j)];
      const auto& vars = bindings.per_equation[static_cast<std::size_t>(j)];
      std::vector<double> vals(vars.size());
      for (std::size_t v = 0; v < vars.size(); ++v)
        vals[v] = vars[v].coord ? coords[static_cast<std::size_t>(vars[v].index)]
                                : slot_vals[static_cast<std::size_t>(vars[v].index)];
      EvalEnv env{vals};
      double f = expr.eval(env);
      if (env.fault) {
        out.fault = true;
        out.fault_what = env.fault_what + " in equation " + std::to_string(j + 1);
        return out;
      }
      double linear = 0;
      const auto& row = bindings.beta_rows[static_cast<std::size_t>(j)];
      for (int k = 0; k < zc; ++k) linear += row(k) * slot_vals[static_cast<std::size_t>(k)];
      out.values.component(j)[i] = f - linear;
    }
  }
  return out;
}

namespace {

// One application of the affine map: G = w1 + F^-1[ W2hat * F(psi * mask) ].
// Returns false on an expression fault.
bool apply_map(const FieldArray& z1, const KernelPair& kernels, const ProblemSpec& problem,
               const ReductionPlan& plan, const ParameterSet& params, const SpaceTimeGrid& grid,
               const IndicatorMask& mask, const Transformer& transformer, FieldArray& g_out,
               std::string* fault_what) {
  const int m = plan.m();
  const int zc = plan.zcols();
  PsiResult psi = evaluate_psi(z1, problem, plan, params, grid, mask);
  if (psi.fault) {
    if (fault_what) *fault_what = psi.fault_what;
    return false;
  }
  const SpectralArray s_hat = transformer.forward_raw(psi.values);
  SpectralArray conv_hat = SpectralArray::zeros(grid, zc);
  for (int row = 0; row < zc; ++row) {
    auto dst = conv_hat.component(row);
    for (int col = 0; col < m; ++col) {
      auto ker = kernels.w2_hat.component(row * m + col);
      auto src = s_hat.component(col);
      for (std::int64_t i = 0; i < grid.cell_count(); ++i) dst[i] += ker[i] * src[i];
    }
  }
  g_out = transformer.inverse(conv_hat);
  for (int c = 0; c < zc; ++c) {
    auto dst = g_out.component(c);
    auto w1c = kernels.w1.component(c);
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) dst[i] += w1c[i];
  }
  return true;
}

}  // namespace

PicardSolution picard_solve(const KernelPair& kernels, const ProblemSpec& problem,
                            const ReductionPlan& plan, const ParameterSet& params,
                            const SpaceTimeGrid& grid, const SolverConfig& config,
                            const Transformer& transformer) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int zc = plan.zcols();
  const IndicatorMask mask(grid);

  PicardSolution out;
  out.z1 = FieldArray::zeros(grid, zc);
  // initial iterate: the boundary-data term restricted to the box
  for (int c = 0; c < zc; ++c) {
    auto dst = out.z1.component(c);
    auto src = kernels.w1.component(c);
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) dst[i] = mask[i] ? src[i] : 0.0;
  }

  FieldArray g;
  FieldArray delta = FieldArray::zeros(grid, zc);
  FieldArray best = out.z1;
  double best_norm = std::numeric_limits<double>::infinity();
  double min_norm = std::numeric_limits<double>::infinity();
  int violations = 0;

  // Anderson history (residuals r = G*mask - Z and iterates)
  const int depth = config.anderson_depth;
  std::vector<std::vector<double>> hist_z, hist_r;

  auto& rep = out.report;
  for (int it = 0; it < config.max_iterations; ++it) {
    if (!apply_map(out.z1, kernels, problem, plan, params, grid, mask, transformer, g,
                   &rep.fault_what)) {
      rep.fault = true;
      break;
    }
    // delta = G*mask - Z
    double delta_sq = 0, next_sq = 0;
    for (int c = 0; c < zc; ++c) {
      auto d = delta.component(c);
      auto zcur = out.z1.component(c);
      auto gc = g.component(c);
      for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
        const double gi = mask[i] ? gc[i] : 0.0;
        d[i] = gi - zcur[i];
        delta_sq += d[i] * d[i];
      }
    }

    if (depth > 0) {
      // record residual history before mixing
      hist_z.emplace_back(out.z1.values);
      hist_r.emplace_back(delta.values);
      if (static_cast<int>(hist_z.size()) > depth + 1) {
        hist_z.erase(hist_z.begin());
        hist_r.erase(hist_r.begin());
      }
      const int hk = static_cast<int>(hist_z.size()) - 1;
      if (hk >= 1) {
        // least squares over residual differences r_k - r_{k-1-j}
        Eigen::MatrixXd normal(hk, hk);
        Eigen::VectorXd rhs(hk);
        std::vector<std::vector<double>> drcols(static_cast<std::size_t>(hk));
        for (int jcol = 0; jcol < hk; ++jcol) {
          auto& col = drcols[static_cast<std::size_t>(jcol)];
          col.resize(delta.values.size());
          const auto& r_old = hist_r[static_cast<std::size_t>(hk - 1 - jcol)];
          for (std::size_t i = 0; i < col.size(); ++i) col[i] = delta.values[i] - r_old[i];
        }
        for (int a = 0; a < hk; ++a) {
          double dot_r = 0;
          for (std::size_t i = 0; i < delta.values.size(); ++i)
            dot_r += drcols[static_cast<std::size_t>(a)][i] * delta.values[i];
          rhs(a) = dot_r;
          for (int b = a; b < hk; ++b) {
            double dot = 0;
            for (std::size_t i = 0; i < delta.values.size(); ++i)
              dot += drcols[static_cast<std::size_t>(a)][i] * drcols[static_cast<std::size_t>(b)][i];
            normal(a, b) = normal(b, a) = dot;
          }
        }
        normal.diagonal().array() += 1e-12 * (1.0 + normal.trace());
        const Eigen::VectorXd gamma = normal.ldlt().solve(rhs);
        // mixed update: z+ = z + theta*r - sum gamma_j [(z_k - z_old_j) + theta (r_k - r_old_j)]
        for (std::size_t i = 0; i < out.z1.values.size(); ++i) {
          double zi = out.z1.values[i] + config.damping * delta.values[i];
          for (int jcol = 0; jcol < hk; ++jcol) {
            const auto& z_old = hist_z[static_cast<std::size_t>(hk - 1 - jcol)];
            zi -= gamma(jcol) * ((out.z1.values[i] - z_old[i]) +
                                 config.damping * drcols[static_cast<std::size_t>(jcol)][i]);
          }
          out.z1.values[i] = zi;
        }
      } else {
        for (std::size_t i = 0; i < out.z1.values.size(); ++i)
          out.z1.values[i] += config.damping * delta.values[i];
      }
      next_sq = 0;
      for (double v : out.z1.values) next_sq += v * v;
      const double norm = config.damping * std::sqrt(delta_sq) /
                          std::max(std::sqrt(next_sq), 1e-300);
      rep.update_norms.push_back(norm);
    } else {
      // plain damped step: z += damping * delta (bit-exact no-op when delta = 0)
      for (int c = 0; c < zc; ++c) {
        auto zcur = out.z1.component(c);
        auto d = delta.component(c);
        for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
          zcur[i] += config.damping * d[i];
          next_sq += zcur[i] * zcur[i];
        }
      }
      const double norm = config.damping * std::sqrt(delta_sq) /
                          std::max(std::sqrt(next_sq), 1e-300);
      rep.update_norms.push_back(norm);
    }

    rep.iterations = it + 1;
    const double norm = rep.update_norms.back();
    if (!std::isfinite(norm) || norm > 1e8) {
      rep.diverged = true;
      break;
    }
    if (norm < best_norm) {
      best_norm = norm;
      best = out.z1;
    }
    if (norm <= config.rel_tolerance) {
      rep.converged = true;
      break;
    }
    // divergence rule: update norm above factor * running minimum for
    // `window` consecutive iterations
    min_norm = std::min(min_norm, norm);
    if (norm > config.divergence_factor * min_norm) {
      if (++violations >= config.window) {
        rep.diverged = true;
        break;
      }
    } else {
      violations = 0;
    }
  }

  if (rep.diverged) out.z1 = best;  // return the best iterate, converged stays false
  if (!rep.update_norms.empty()) rep.update_norm_final = rep.update_norms.back();

  // contraction ratio: geometric mean over the last few steps
  if (rep.update_norms.size() >= 2) {
    const std::size_t lookback = std::min<std::size_t>(10, rep.update_norms.size() - 1);
    double log_sum = 0;
    std::size_t used = 0;
    for (std::size_t i = rep.update_norms.size() - lookback; i < rep.update_norms.size(); ++i) {
      const double prev = rep.update_norms[i - 1];
      const double cur = rep.update_norms[i];
      if (prev > 0 && cur > 0) {
        log_sum += std::log(cur / prev);
        ++used;
      }
    }
    rep.contraction_ratio = used ? std::exp(log_sum / static_cast<double>(used)) : 0.0;
  }

  if (!rep.fault) {
    const auto residuals =
        classical_residual(out.z1, kernels, problem, plan, params, grid, transformer);
    rep.interior_residual = residuals.first;
    rep.exterior_residual = residuals.second;
    if (rep.converged) {
      FieldArray w1m = kernels.w1;
      mask.apply(w1m);
      const double scale = grid_norm(w1m, grid) + grid_norm(out.z1, grid);
      rep.residual_bound_ok =
          rep.interior_residual <= 2.0 * config.rel_tolerance * scale + 1e-14 * (1.0 + scale);
    }
  }
  rep.wall_time_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::pair<double, double> classical_residual(const FieldArray& z1, const KernelPair& kernels,
                                             const ProblemSpec& problem, const ReductionPlan& plan,
                                             const ParameterSet& params, const SpaceTimeGrid& grid,
                                             const Transformer& transformer) {
  const IndicatorMask mask(grid);
  FieldArray g;
  std::string fault;
  if (!apply_map(z1, kernels, problem, plan, params, grid, mask, transformer, g, &fault))
    throw std::runtime_error("residual evaluation hit an expression fault: " + fault);

  // residual R = Z1*I - (w1 + conv); exterior band stops at the half-padding
  // mark so wraparound-contaminated cells stay out of the diagnostic.
  std::vector<std::uint8_t> exterior(static_cast<std::size_t>(grid.cell_count()), 0);
  int idx[4];
  for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
    grid.unflatten(i, idx);
    bool in_band = true, interior = true;
    for (int a = 0; a < grid.axes(); ++a) {
      if (idx[a] >= grid.resolution(a) + grid.pad_cells(a) / 2) in_band = false;
      if (idx[a] >= grid.resolution(a)) interior = false;
    }
    exterior[static_cast<std::size_t>(i)] = in_band && !interior;
  }

  FieldArray r = FieldArray::zeros(grid, z1.components);
  for (int c = 0; c < z1.components; ++c) {
    auto rc = r.component(c);
    auto zc = z1.component(c);
    auto gc = g.component(c);
    for (std::int64_t i = 0; i < grid.cell_count(); ++i)
      rc[i] = (mask[i] ? zc[i] : 0.0) - gc[i];
  }
  std::vector<std::uint8_t> interior_region(mask.values().begin(), mask.values().end());
  return {grid_norm_region(r, grid, interior_region), grid_norm_region(r, grid, exterior)};
}

ExtractedSolution extract_solution(const FieldArray& z1, const ProblemSpec& problem,
                                   const ReductionPlan& plan, const ParameterSet& params,
                                   const SpaceTimeGrid& grid, const IndicatorMask& mask) {
  const int m = plan.m();
  const int zc = plan.zcols();
  ExtractedSolution out;
  out.u = FieldArray::zeros(grid, m);
  out.derivatives = FieldArray::zeros(grid, zc);
  out.derivatives.values = z1.values;

  // psi is needed only when some component is resolved on the left
  bool need_psi = false;
  for (const auto& ref : plan.value_rows) need_psi |= ref.beta;
  PsiResult psi;
  if (need_psi) {
    psi = evaluate_psi(z1, problem, plan, params, grid, mask);
    if (psi.fault) throw std::runtime_error("solution extraction hit a psi fault: " + psi.fault_what);
  }

  for (int c = 0; c < m; ++c) {
    const RowRef ref = plan.value_rows[static_cast<std::size_t>(c)];
    auto dst = out.u.component(c);
    if (!ref.beta) {
      auto src = z1.component(ref.index);
      std::copy(src.begin(), src.end(), dst.begin());
      continue;
    }
    const Eigen::VectorXd row = params.beta_row(ref.index);
    auto s = psi.values.component(ref.index);
    for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
      double v = s[i];
      for (int k = 0; k < zc; ++k) v += row(k) * z1.component(k)[i];
      dst[i] = v;
    }
  }
  return out;
}

}  // namespace fxpde
