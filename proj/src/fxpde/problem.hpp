#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fxpde/grid.hpp"
#include "fxpde/reduction.hpp"

namespace fxpde {

/// Picard solver knobs.
struct SolverConfig {
  int max_iterations = 500;
  double rel_tolerance = 1e-8;
  double damping = 1.0;            // in (0, 1]
  double divergence_factor = 10.0; // abort when update norms grow this much
  int window = 5;                  // ... over this many consecutive steps
  int anderson_depth = 0;          // 0 = plain damped Picard

  void validate() const;  // throws std::invalid_argument
};

/// A face of the box: axis 1..3, low side (coordinate 0) or high (extent).
struct Face {
  int axis = 1;
  bool high = false;
  friend bool operator<(const Face& a, const Face& b) {
    return a.axis != b.axis ? a.axis < b.axis : a.high < b.high;
  }
  friend bool operator==(const Face&, const Face&) = default;
};
std::string face_name(const Face& f);               // left/right/bottom/top/back/front
std::optional<Face> parse_face_name(std::string_view, int dim);

/// Full problem statement: domain box, equation system, initial and boundary
/// data expressions, optional explicit parameters (auto-selected otherwise)
/// and solver defaults.
struct ProblemSpec {
  std::string name;  // builtin tag or file stem
  DomainSpec domain;
  EquationSystem system;
  std::vector<Expression> initial_exprs;                 // per component, in x[,y,z]
  std::map<Face, std::vector<Expression>> boundary_exprs;  // per face, per component
  std::optional<ParameterSet> params;                    // nullopt -> auto
  SolverConfig solver;

  std::vector<int> default_resolution;  // per axis, time first
  double pad_time = 8.0;
  double pad_space = 2.0;
  double oracle_threshold = 0.05;  // acceptance bound used by compare runs

  void validate() const;
};

struct ProblemParseError : std::runtime_error {
  ProblemParseError(int line, int column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line(line),
        column(column) {}
  int line, column;
};

/// Parses the structured problem text (sections [domain], [system],
/// [initial], [boundary.<face>], [params], [solver]). Unknown keys are
/// errors.
ProblemSpec parse_problem_text(const std::string& text, const std::string& name);
ProblemSpec load_problem_file(const std::filesystem::path& path);
/// Accepts either a file path or "builtin:<name>".
ProblemSpec load_problem(const std::string& ref);

/// Registry of shipped problems: transport, reaction_linear, reaction_cubic,
/// burgers, hamilton_jacobi_1d, heat_reduced_1d.
ProblemSpec builtin(std::string_view name);
std::vector<std::string> builtin_names();

/// Parameter auto-selection. The value-group block is -(1/T) E, which keeps
/// every pole of the time pencil in the decaying half plane. Derivative-group
/// blocks take the Jacobian of f with respect to those slots at a base state
/// (mean initial data, zero derivatives, box center, t = T/2), so the
/// linear part absorbs the stiff transport couplings and the Picard residual
/// stays mild.
ParameterSet auto_parameters(const ProblemSpec& problem, const ReductionPlan& plan);

/// problem.params if present, otherwise auto_parameters.
ParameterSet resolve_parameters(const ProblemSpec& problem, const ReductionPlan& plan);

}  // namespace fxpde
