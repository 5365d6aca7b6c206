#pragma once

#include "fxpde/spectral.hpp"

namespace fxpde {

/// Outcome of a Picard run. `converged` holds exactly when the last relative
/// update norm dropped to the configured tolerance.
struct FixedPointReport {
  int iterations = 0;
  std::vector<double> update_norms;  // relative L2 update per iteration
  bool converged = false;
  bool diverged = false;
  bool fault = false;
  std::string fault_what;
  double update_norm_final = 0;
  double contraction_ratio = 0;      // geometric mean over the final stretch
  double interior_residual = 0;
  double exterior_residual = 0;
  // converged runs must satisfy interior <= 2 tol (||w1|| + ||Z1||)
  bool residual_bound_ok = true;
  double wall_time_ms = 0;
};

/// Pointwise nonlinear residual Z2 = f(slots, x, y, z, t) - sum_g C_g V_g on
/// the masked cells (zero outside). Expression domain faults flag the result
/// instead of leaving silent NaNs.
struct PsiResult {
  FieldArray values;  // m components
  bool fault = false;
  std::string fault_what;
};
PsiResult evaluate_psi(const FieldArray& z1, const ProblemSpec& problem,
                       const ReductionPlan& plan, const ParameterSet& params,
                       const SpaceTimeGrid& grid, const IndicatorMask& mask);

/// Damped Picard iteration on Z1 = mask * (w1 + W2[psi(Z1) * mask]):
/// starts from Z1 = w1 * mask, applies the source kernel in frequency space
/// (linear convolution by the grid padding), and stops on tolerance,
/// iteration budget, update-norm divergence or a numeric fault. With
/// anderson_depth > 0 the update is accelerated by least-squares residual
/// mixing over that many previous iterates.
struct PicardSolution {
  FieldArray z1;
  FixedPointReport report;
};
PicardSolution picard_solve(const KernelPair& kernels, const ProblemSpec& problem,
                            const ReductionPlan& plan, const ParameterSet& params,
                            const SpaceTimeGrid& grid, const SolverConfig& config,
                            const Transformer& transformer);

/// Residual of the integral equation split by region: the interior norm is
/// taken over the box, the exterior norm over the padded complement up to
/// the half-padding mark (the outer half absorbs truncation tails). A small
/// exterior residual marks a classical-compatible solution, a large one a
/// generalized-only solution.
std::pair<double, double> classical_residual(const FieldArray& z1, const KernelPair& kernels,
                                             const ProblemSpec& problem, const ReductionPlan& plan,
                                             const ParameterSet& params, const SpaceTimeGrid& grid,
                                             const Transformer& transformer);

/// Pulls the solution components out of Z1: u_i is either a Z1 slot or the
/// parameter row combination c_i . Z1 + psi_i for components resolved on the
/// left. `derivatives` carries the u_x/u_y/u_z slots for coherence checks.
struct ExtractedSolution {
  FieldArray u;            // m components
  FieldArray derivatives;  // zcols components (raw Z1 slots)
};
ExtractedSolution extract_solution(const FieldArray& z1, const ProblemSpec& problem,
                                   const ReductionPlan& plan, const ParameterSet& params,
                                   const SpaceTimeGrid& grid, const IndicatorMask& mask);

}  // namespace fxpde
