#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fxpde/expression.hpp"

namespace fxpde {

/// One of the (2+d)*m scalar quantities of an m-component system in d space
/// dimensions: a component of u_t, u, u_x, u_y or u_z.
enum class SlotKind : int { TimeDeriv = 0, Value = 1, DerivX = 2, DerivY = 3, DerivZ = 4 };

struct SlotId {
  SlotKind kind = SlotKind::Value;
  int comp = 0;  // 0-based component index
  friend bool operator==(const SlotId&, const SlotId&) = default;
};

std::string slot_name(const SlotId& slot);                      // "u1", "u2_x", ...
std::optional<SlotId> parse_slot_name(std::string_view name);   // nullopt if malformed
/// True when the slot exists for the given dimension (no u_y in 1D, ...).
bool slot_in_dimension(const SlotId& slot, int dim);

/// First-order system resolved with one slot per equation on the left:
///   v_j = f_j(v_{m+1}, ..., x, y, z, t).
/// `rhs_order` lists the remaining slots; the value slots (components of u)
/// come first, so r = number of leading Value entries.
struct EquationSystem {
  int m = 0;
  int dim = 1;
  std::vector<SlotId> lhs;         // size m
  std::vector<SlotId> rhs_order;   // size (1+dim)*m
  std::vector<Expression> rhs_exprs;  // size m

  int groups() const { return 1 + dim; }      // RHS slot groups (C-blocks)
  int zcols() const { return groups() * m; }  // length of Z1
  int r() const;                               // leading Value slots in rhs_order
  void validate() const;                       // throws std::invalid_argument
};

/// Builds the canonical RHS ordering for a set of LHS slots: value slots
/// first (by component), then time derivatives, then x/y/z derivatives.
std::vector<SlotId> canonical_rhs_order(int m, int dim, const std::vector<SlotId>& lhs);

/// Constant coefficient blocks of the linearization, one m-by-m matrix per
/// RHS slot group. For m = 1 in a time-resolved plan these are the scalars
/// (a, b, c, d).
struct ParameterSet {
  std::vector<Eigen::MatrixXd> C;

  int m() const { return C.empty() ? 0 : static_cast<int>(C[0].rows()); }
  int groups() const { return static_cast<int>(C.size()); }
  double scalar(int g) const { return C[static_cast<std::size_t>(g)](0, 0); }
  double a() const { return scalar(0); }
  double b() const { return scalar(1); }

  static ParameterSet zeros(int m, int groups);
  static ParameterSet scalars(std::span<const double> abcd, int dim);
  /// Row j of (C1 | C2 | ...) as a dense vector of length groups*m.
  Eigen::VectorXd beta_row(int j) const;
};

enum class PlanForm {
  Scalar,        // m = 1, resolved with respect to u_t
  TimeResolved,  // lhs = (u1_t, ..., um_t) in order
  General,       // anything else
};

/// Row of a selector matrix: either a parameter row beta^T_j or a unit row
/// picking Z1 column `index`.
struct RowRef {
  bool beta = false;
  int index = 0;  // equation j when beta, Z1 column otherwise
  friend bool operator==(const RowRef&, const RowRef&) = default;
};

/// Slot permutation bookkeeping tying the system to the symbol matrices:
/// value-row selectors (u = A0 Z), derivative-row selectors (stacked per
/// axis), the constant B2 block and the row permutation P sorting the
/// derivative stack into ((parameter rows), (0, E)).
struct ReductionPlan {
  EquationSystem system;
  PlanForm form = PlanForm::General;
  int r = 0;

  std::vector<RowRef> value_rows;   // m rows (selector for u)
  std::vector<RowRef> deriv_rows;   // (1+dim)*m rows: time block, then x, y, z
  std::vector<int> b2_col;          // per deriv row: source column j, or -1 (zero row)
  std::vector<int> permutation;     // P: output row i takes deriv row permutation[i]
  std::vector<int> slot_position;   // per (kind,comp): Z1 column, or -1 if on the LHS

  int m() const { return system.m; }
  int dim() const { return system.dim; }
  int zcols() const { return system.zcols(); }
  int slot_index(const SlotId& s) const {
    return slot_position[static_cast<std::size_t>(static_cast<int>(s.kind) * system.m + s.comp)];
  }
  int permutation_sign() const;

  /// Stable text report of slot assignments, selector rows, P, parameters
  /// and causality (when given); used for golden-file comparisons.
  std::string debug_dump(const ParameterSet* params = nullptr,
                         const struct CausalityReport* causality = nullptr) const;
};

ReductionPlan build_plan(const EquationSystem& system);

/// Frequency-domain matrices of the reduced system: B1 (zcols x zcols) and
/// the constant B2 (zcols x m). `xi` holds one angular frequency per axis
/// (time first).
struct SymbolMatrices {
  Eigen::MatrixXcd B1;
  Eigen::MatrixXd B2;
};
SymbolMatrices assemble_symbol(const ReductionPlan& plan, const ParameterSet& params,
                               std::span<const double> xi);

/// Builds B2 alone (frequency independent).
Eigen::MatrixXd assemble_b2(const ReductionPlan& plan);

/// Generic inversion with singularity thresholding: |det| <= eps_sing flags
/// the frequency as a member of the masked set instead of failing.
struct SymbolInverse {
  bool singular = false;
  std::complex<double> det;
  Eigen::MatrixXcd inverse;  // empty when singular
};
SymbolInverse invert_symbol(const Eigen::MatrixXcd& B1, double eps_sing);

/// Default singularity threshold: 1e-12 * (1 + max entry magnitude).
double default_eps_sing(const Eigen::MatrixXcd& B1);

/// Closed forms for the scalar (m = 1) time-resolved plan. `xi` is
/// (xi0, xi1[, xi2, xi3]); missing axes are treated as zero.
std::complex<double> scalar_symbol_det(std::span<const double> abcd, std::span<const double> xi);
Eigen::MatrixXcd scalar_symbol_inverse(std::span<const double> abcd, std::span<const double> xi);

/// Block symbol of a time-resolved system: B0 = C1 + i xi1 C2 + ... - i xi0 E;
/// det(B1) = det(B0).
Eigen::MatrixXcd block_symbol_b0(const ParameterSet& params, std::span<const double> xi);

/// Causality diagnosis of a parameter choice. The time pencil
/// det(B1)|_{spatial xi = 0} = const * det(z*A05 - B05), z = i*xi0, is
/// extracted by eliminating the constant spatial rows; the plan is causal
/// when every eigenvalue of A05^-1 B05 has negative real part, which puts
/// the kernel poles on the decaying side.
struct CausalityReport {
  bool well_posed = false;          // extraction succeeded, A05 invertible
  bool causal = false;
  bool det_nonzero_generic = false; // det(B1) != 0 at sampled frequencies
  double margin = 0;                // min over eigenvalues of -Re(lambda)
  Eigen::MatrixXd A05, B05;
  std::vector<std::complex<double>> eigenvalues;
  std::string reason;               // set when !well_posed or !causal
  PlanForm form = PlanForm::General;
};
CausalityReport validate_parameters(const ReductionPlan& plan, const ParameterSet& params);

}  // namespace fxpde
