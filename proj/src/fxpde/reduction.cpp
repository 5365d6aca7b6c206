#include "fxpde/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fxpde {

namespace {
constexpr const char* kKindSuffix[5] = {"_t", "", "_x", "_y", "_z"};
}

std::string slot_name(const SlotId& slot) {
  return "u" + std::to_string(slot.comp + 1) + kKindSuffix[static_cast<int>(slot.kind)];
}

std::optional<SlotId> parse_slot_name(std::string_view name) {
  if (name.size() < 2 || name[0] != 'u') return std::nullopt;
  std::size_t i = 1;
  int comp = 0;
  while (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i]))) {
    comp = comp * 10 + (name[i] - '0');
    ++i;
  }
  if (i == 1 || comp < 1) return std::nullopt;
  SlotKind kind = SlotKind::Value;
  if (i != name.size()) {
    if (name[i] != '_' || i + 2 != name.size()) return std::nullopt;
    switch (name[i + 1]) {
      case 't': kind = SlotKind::TimeDeriv; break;
      case 'x': kind = SlotKind::DerivX; break;
      case 'y': kind = SlotKind::DerivY; break;
      case 'z': kind = SlotKind::DerivZ; break;
      default: return std::nullopt;
    }
  }
  return SlotId{kind, comp - 1};
}

bool slot_in_dimension(const SlotId& slot, int dim) {
  switch (slot.kind) {
    case SlotKind::DerivY: return dim >= 2;
    case SlotKind::DerivZ: return dim >= 3;
    default: return true;
  }
}

int EquationSystem::r() const {
  int count = 0;
  for (const auto& s : rhs_order) {
    if (s.kind != SlotKind::Value) break;
    ++count;
  }
  return count;
}

void EquationSystem::validate() const {
  if (m < 1) throw std::invalid_argument("system needs at least one equation");
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (static_cast<int>(lhs.size()) != m) throw std::invalid_argument("one lhs slot per equation");
  if (static_cast<int>(rhs_exprs.size()) != m)
    throw std::invalid_argument("one rhs expression per equation");
  const int total = (2 + dim) * m;
  if (static_cast<int>(rhs_order.size()) != total - m)
    throw std::invalid_argument("rhs_order must list the remaining " +
                                std::to_string(total - m) + " slots");
  // lhs + rhs_order must be exactly the full slot set, no repeats
  std::vector<int> seen(static_cast<std::size_t>(5 * m), 0);
  auto mark = [&](const SlotId& s, const char* where) {
    if (!slot_in_dimension(s, dim))
      throw std::invalid_argument(std::string(where) + ": slot " + slot_name(s) +
                                  " does not exist in " + std::to_string(dim) + "D");
    if (s.comp < 0 || s.comp >= m)
      throw std::invalid_argument(std::string(where) + ": component out of range");
    int& flag = seen[static_cast<std::size_t>(static_cast<int>(s.kind) * m + s.comp)];
    if (flag) throw std::invalid_argument(std::string(where) + ": duplicate slot " + slot_name(s));
    flag = 1;
  };
  for (const auto& s : lhs) mark(s, "lhs");
  for (const auto& s : rhs_order) mark(s, "rhs_order");
  // ordering: all Value slots in rhs_order must come before any derivative
  bool deriv_seen = false;
  for (const auto& s : rhs_order) {
    if (s.kind == SlotKind::Value && deriv_seen)
      throw std::invalid_argument("rhs_order must list u components first");
    if (s.kind != SlotKind::Value) deriv_seen = true;
  }
  // expressions may reference only rhs slots and coordinates
  for (int j = 0; j < m; ++j) {
    for (const auto& name : rhs_exprs[static_cast<std::size_t>(j)].variables()) {
      if (name == "x" || name == "y" || name == "z" || name == "t") {
        if ((name == "y" && dim < 2) || (name == "z" && dim < 3))
          throw std::invalid_argument("equation " + std::to_string(j + 1) +
                                      " references coordinate " + name + " beyond the dimension");
        continue;
      }
      const auto slot = parse_slot_name(name);
      if (!slot) throw std::invalid_argument("equation " + std::to_string(j + 1) +
                                             " references unknown name " + name);
      if (std::find(rhs_order.begin(), rhs_order.end(), *slot) == rhs_order.end())
        throw std::invalid_argument("equation " + std::to_string(j + 1) + " references slot " +
                                    name + " which is not available on the right-hand side");
    }
  }
}

std::vector<SlotId> canonical_rhs_order(int m, int dim, const std::vector<SlotId>& lhs) {
  auto on_lhs = [&](const SlotId& s) {
    return std::find(lhs.begin(), lhs.end(), s) != lhs.end();
  };
  std::vector<SlotId> order;
  const SlotKind kinds[5] = {SlotKind::Value, SlotKind::TimeDeriv, SlotKind::DerivX,
                             SlotKind::DerivY, SlotKind::DerivZ};
  for (const SlotKind kind : kinds) {
    if ((kind == SlotKind::DerivY && dim < 2) || (kind == SlotKind::DerivZ && dim < 3)) continue;
    for (int c = 0; c < m; ++c) {
      const SlotId s{kind, c};
      if (!on_lhs(s)) order.push_back(s);
    }
  }
  return order;
}

ParameterSet ParameterSet::zeros(int m, int groups) {
  ParameterSet p;
  p.C.assign(static_cast<std::size_t>(groups), Eigen::MatrixXd::Zero(m, m));
  return p;
}

ParameterSet ParameterSet::scalars(std::span<const double> abcd, int dim) {
  ParameterSet p = zeros(1, 1 + dim);
  for (int g = 0; g < 1 + dim && g < static_cast<int>(abcd.size()); ++g)
    p.C[static_cast<std::size_t>(g)](0, 0) = abcd[static_cast<std::size_t>(g)];
  return p;
}

Eigen::VectorXd ParameterSet::beta_row(int j) const {
  Eigen::VectorXd row(groups() * m());
  for (int g = 0; g < groups(); ++g)
    row.segment(g * m(), m()) = C[static_cast<std::size_t>(g)].row(j).transpose();
  return row;
}

ReductionPlan build_plan(const EquationSystem& system) {
  system.validate();
  const int m = system.m;
  ReductionPlan plan;
  plan.system = system;
  plan.r = system.r();

  // slot -> Z1 column (rhs position) or -1 when resolved on the left
  plan.slot_position.assign(static_cast<std::size_t>(5 * m), -1);
  for (int k = 0; k < static_cast<int>(system.rhs_order.size()); ++k) {
    const SlotId& s = system.rhs_order[static_cast<std::size_t>(k)];
    plan.slot_position[static_cast<std::size_t>(static_cast<int>(s.kind) * m + s.comp)] = k;
  }
  auto lhs_equation = [&](const SlotId& s) {
    for (int j = 0; j < m; ++j)
      if (system.lhs[static_cast<std::size_t>(j)] == s) return j;
    return -1;
  };
  auto row_for = [&](const SlotId& s) {
    const int pos = plan.slot_position[static_cast<std::size_t>(static_cast<int>(s.kind) * m + s.comp)];
    if (pos >= 0) return RowRef{false, pos};
    return RowRef{true, lhs_equation(s)};
  };

  for (int c = 0; c < m; ++c) plan.value_rows.push_back(row_for({SlotKind::Value, c}));
  const SlotKind deriv_kinds[4] = {SlotKind::TimeDeriv, SlotKind::DerivX, SlotKind::DerivY,
                                   SlotKind::DerivZ};
  for (int a = 0; a < 1 + system.dim; ++a)
    for (int c = 0; c < m; ++c) plan.deriv_rows.push_back(row_for({deriv_kinds[a], c}));

  // constant B2: parameter rows contribute their residual column, unit rows none
  plan.b2_col.resize(plan.deriv_rows.size());
  for (std::size_t i = 0; i < plan.deriv_rows.size(); ++i)
    plan.b2_col[i] = plan.deriv_rows[i].beta ? plan.deriv_rows[i].index : -1;

  // P: parameter rows first (equation order), then unit rows sorted by column
  std::vector<int> betas, units;
  for (int i = 0; i < static_cast<int>(plan.deriv_rows.size()); ++i)
    (plan.deriv_rows[static_cast<std::size_t>(i)].beta ? betas : units).push_back(i);
  std::sort(betas.begin(), betas.end(), [&](int lhs_row, int rhs_row) {
    return plan.deriv_rows[static_cast<std::size_t>(lhs_row)].index <
           plan.deriv_rows[static_cast<std::size_t>(rhs_row)].index;
  });
  std::sort(units.begin(), units.end(), [&](int lhs_row, int rhs_row) {
    return plan.deriv_rows[static_cast<std::size_t>(lhs_row)].index <
           plan.deriv_rows[static_cast<std::size_t>(rhs_row)].index;
  });
  plan.permutation = betas;
  plan.permutation.insert(plan.permutation.end(), units.begin(), units.end());

  // classify the plan form
  plan.form = PlanForm::General;
  bool time_resolved = true;
  for (int j = 0; j < m; ++j)
    time_resolved &= system.lhs[static_cast<std::size_t>(j)] == SlotId{SlotKind::TimeDeriv, j};
  if (time_resolved) plan.form = (m == 1) ? PlanForm::Scalar : PlanForm::TimeResolved;
  return plan;
}

int ReductionPlan::permutation_sign() const {
  std::vector<int> p = permutation;
  int sign = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (p[i] != static_cast<int>(i)) {
      std::swap(p[i], p[static_cast<std::size_t>(p[i])]);
      sign = -sign;
    }
  }
  return sign;
}

namespace {

// Dense row of a selector in the Z1 columns: unit row or parameter row.
Eigen::RowVectorXd selector_row(const RowRef& ref, const ParameterSet& params, int zc) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(zc);
  if (ref.beta)
    row = params.beta_row(ref.index).transpose();
  else
    row(ref.index) = 1.0;
  return row;
}

}  // namespace

SymbolMatrices assemble_symbol(const ReductionPlan& plan, const ParameterSet& params,
                               std::span<const double> xi) {
  const int zc = plan.zcols();
  const int m = plan.m();
  const int naxes = 1 + plan.dim();
  if (static_cast<int>(xi.size()) != naxes)
    throw std::invalid_argument("xi needs one entry per axis");
  if (params.m() != m || params.groups() != plan.system.groups())
    throw std::invalid_argument("parameter set shape does not match the plan");

  SymbolMatrices out;
  out.B1.resize(zc, zc);
  for (int a = 0; a < naxes; ++a) {
    const std::complex<double> ixi(0.0, xi[static_cast<std::size_t>(a)]);
    for (int c = 0; c < m; ++c) {
      const int row = a * m + c;
      const Eigen::RowVectorXd value_row =
          selector_row(plan.value_rows[static_cast<std::size_t>(c)], params, zc);
      const Eigen::RowVectorXd deriv_row =
          selector_row(plan.deriv_rows[static_cast<std::size_t>(row)], params, zc);
      out.B1.row(row) = ixi * value_row.cast<std::complex<double>>() -
                        deriv_row.cast<std::complex<double>>();
    }
  }
  out.B2 = assemble_b2(plan);
  return out;
}

Eigen::MatrixXd assemble_b2(const ReductionPlan& plan) {
  Eigen::MatrixXd b2 = Eigen::MatrixXd::Zero(plan.zcols(), plan.m());
  for (std::size_t i = 0; i < plan.b2_col.size(); ++i)
    if (plan.b2_col[i] >= 0) b2(static_cast<Eigen::Index>(i), plan.b2_col[i]) = 1.0;
  return b2;
}

double default_eps_sing(const Eigen::MatrixXcd& B1) {
  return 1e-12 * (1.0 + B1.cwiseAbs().maxCoeff());
}

SymbolInverse invert_symbol(const Eigen::MatrixXcd& B1, double eps_sing) {
  SymbolInverse out;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(B1);
  out.det = lu.determinant();
  if (std::abs(out.det) <= eps_sing) {
    out.singular = true;
    return out;
  }
  out.inverse = lu.inverse();
  return out;
}

std::complex<double> scalar_symbol_det(std::span<const double> abcd, std::span<const double> xi) {
  // det(B1) = a + i xi1 b + i xi2 c + i xi3 d - i xi0
  std::complex<double> det(abcd[0], -xi[0]);
  for (std::size_t s = 1; s < xi.size() && s < abcd.size(); ++s)
    det += std::complex<double>(0.0, xi[s] * abcd[s]);
  return det;
}

Eigen::MatrixXcd scalar_symbol_inverse(std::span<const double> abcd, std::span<const double> xi) {
  // Solving B1 v = e_k column by column gives
  //   B1^-1 = -[ 1/a1        -b/a1        -c/a1        -d/a1
  //              i xi1/a1    1 - i xi1 b/a1   -i xi1 c/a1  ...      ]
  // (the published closed form carries the opposite sign on the b, c, d
  // blocks; the version here satisfies B1 * B1^-1 = E for every b, c, d).
  const int n = static_cast<int>(xi.size());
  const std::complex<double> a1 = scalar_symbol_det(abcd, xi);
  Eigen::MatrixXcd inv(n, n);
  for (int rowi = 0; rowi < n; ++rowi) {
    const std::complex<double> lead =
        rowi == 0 ? std::complex<double>(1, 0) : std::complex<double>(0, xi[static_cast<std::size_t>(rowi)]);
    for (int col = 0; col < n; ++col) {
      std::complex<double> v = lead / a1;
      if (col > 0) {
        v *= -abcd[static_cast<std::size_t>(col)];
        if (col == rowi) v += 1.0;
      }
      inv(rowi, col) = -v;
    }
  }
  return inv;
}

Eigen::MatrixXcd block_symbol_b0(const ParameterSet& params, std::span<const double> xi) {
  const int m = params.m();
  Eigen::MatrixXcd b0 = params.C[0].cast<std::complex<double>>();
  for (int g = 1; g < params.groups(); ++g)
    b0 += std::complex<double>(0.0, xi[static_cast<std::size_t>(g)]) *
          params.C[static_cast<std::size_t>(g)].cast<std::complex<double>>();
  b0 -= std::complex<double>(0.0, xi[0]) * Eigen::MatrixXcd::Identity(m, m);
  return b0;
}

CausalityReport validate_parameters(const ReductionPlan& plan, const ParameterSet& params) {
  CausalityReport rep;
  rep.form = plan.form;
  const int m = plan.m();
  const int zc = plan.zcols();
  const int spatial_rows = plan.dim() * m;

  // det(B1) sampled at a few fixed frequencies (generic nonvanishing probe)
  {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    int nonzero = 0;
    for (int trial = 0; trial < 8; ++trial) {
      std::vector<double> xi(static_cast<std::size_t>(1 + plan.dim()));
      for (auto& v : xi) v = dist(rng);
      const auto sym = assemble_symbol(plan, params, xi);
      const auto inv = invert_symbol(sym.B1, default_eps_sing(sym.B1));
      if (!inv.singular) ++nonzero;
    }
    rep.det_nonzero_generic = nonzero > 0;
  }

  // Time pencil at zero spatial frequency: B1(z) = [z*A - B; -W] with
  //   A = value-selector rows, B = time-derivative selector rows,
  //   W = spatial-derivative selector rows (all restricted to Z1 columns).
  Eigen::MatrixXd A(m, zc), B(m, zc);
  Eigen::MatrixXd W(spatial_rows, zc);
  for (int c = 0; c < m; ++c) {
    A.row(c) = selector_row(plan.value_rows[static_cast<std::size_t>(c)], params, zc);
    B.row(c) = selector_row(plan.deriv_rows[static_cast<std::size_t>(c)], params, zc);
  }
  for (int i = 0; i < spatial_rows; ++i)
    W.row(i) = selector_row(plan.deriv_rows[static_cast<std::size_t>(m + i)], params, zc);

  // Eliminate W against a full-rank column subset J; the complement K keeps
  // the m-by-m pencil z*A05 - B05 with
  //   A05 = A_K - A_J W_J^-1 W_K,  B05 = B_K - B_J W_J^-1 W_K.
  // J is picked by column-pivoted Gram-Schmidt on W.
  std::vector<int> jcols, kcols;
  {
    Eigen::MatrixXd R = W;
    std::vector<char> used(static_cast<std::size_t>(zc), 0);
    const double tol = 1e-10 * (1.0 + W.norm());
    for (int step = 0; step < spatial_rows; ++step) {
      int best = -1;
      double best_norm = tol;
      for (int c2 = 0; c2 < zc; ++c2) {
        if (used[static_cast<std::size_t>(c2)]) continue;
        const double n2 = R.col(c2).norm();
        if (n2 > best_norm) {
          best_norm = n2;
          best = c2;
        }
      }
      if (best < 0) {
        rep.reason = "spatial selector rows are rank deficient";
        return rep;
      }
      used[static_cast<std::size_t>(best)] = 1;
      jcols.push_back(best);
      const Eigen::VectorXd q = R.col(best) / R.col(best).norm();
      for (int c2 = 0; c2 < zc; ++c2)
        if (!used[static_cast<std::size_t>(c2)]) R.col(c2) -= q * q.dot(R.col(c2));
    }
    for (int c2 = 0; c2 < zc; ++c2)
      if (!used[static_cast<std::size_t>(c2)]) kcols.push_back(c2);
  }

  Eigen::MatrixXd WJ(spatial_rows, spatial_rows), WK(spatial_rows, m);
  Eigen::MatrixXd AJ(m, spatial_rows), AK(m, m), BJ(m, spatial_rows), BK(m, m);
  for (int i = 0; i < spatial_rows; ++i) {
    WJ.col(i) = W.col(jcols[static_cast<std::size_t>(i)]);
    AJ.col(i) = A.col(jcols[static_cast<std::size_t>(i)]);
    BJ.col(i) = B.col(jcols[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < m; ++i) {
    WK.col(i) = W.col(kcols[static_cast<std::size_t>(i)]);
    AK.col(i) = A.col(kcols[static_cast<std::size_t>(i)]);
    BK.col(i) = B.col(kcols[static_cast<std::size_t>(i)]);
  }
  const Eigen::MatrixXd WJinvWK = WJ.partialPivLu().solve(WK);
  rep.A05 = AK - AJ * WJinvWK;
  rep.B05 = BK - BJ * WJinvWK;

  Eigen::FullPivLU<Eigen::MatrixXd> a05lu(rep.A05);
  a05lu.setThreshold(1e-10);
  if (!a05lu.isInvertible()) {
    rep.reason = "time pencil matrix A05 is numerically singular";
    return rep;
  }
  rep.well_posed = true;

  const Eigen::MatrixXd M = a05lu.solve(rep.B05);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  rep.margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    rep.eigenvalues.push_back(lambda);
    rep.margin = std::min(rep.margin, -lambda.real());
  }
  rep.causal = rep.margin > 0;
  if (!rep.causal) rep.reason = "an eigenvalue of A05^-1 B05 has nonnegative real part";
  return rep;
}

std::string ReductionPlan::debug_dump(const ParameterSet* params,
                                      const CausalityReport* causality) const {
  std::ostringstream out;
  const char* form_name = form == PlanForm::Scalar ? "scalar"
                          : form == PlanForm::TimeResolved ? "time-resolved"
                                                           : "general";
  out << "plan-form: " << form_name << "\n";
  out << "components: " << m() << "\n";
  out << "spatial-dim: " << dim() << "\n";
  out << "rhs-values-r: " << r << "\n";
  out << "lhs:";
  for (const auto& s : system.lhs) out << " " << slot_name(s);
  out << "\nrhs-order:";
  for (const auto& s : system.rhs_order) out << " " << slot_name(s);
  out << "\n";
  auto dump_rows = [&](const char* label, std::span<const RowRef> rows) {
    out << label << ":";
    for (const auto& ref : rows)
      out << (ref.beta ? " beta:" : " unit:") << ref.index;
    out << "\n";
  };
  dump_rows("value-rows", value_rows);
  const char* axis_names[4] = {"t", "x", "y", "z"};
  for (int a = 0; a < 1 + dim(); ++a) {
    const std::string label = std::string("deriv-rows[") + axis_names[a] + "]";
    dump_rows(label.c_str(), std::span<const RowRef>(deriv_rows).subspan(
                                 static_cast<std::size_t>(a * m()), static_cast<std::size_t>(m())));
  }
  out << "b2-columns:";
  for (int col : b2_col) {
    if (col < 0)
      out << " -";
    else
      out << " " << col;
  }
  out << "\npermutation:";
  for (int p : permutation) out << " " << p;
  out << "\npermutation-sign: " << permutation_sign() << "\n";
  if (params) {
    char buf[64];
    for (int g = 0; g < params->groups(); ++g) {
      out << "C" << (g + 1) << ":";
      for (int i = 0; i < params->m(); ++i) {
        if (i) out << " ;";
        for (int j = 0; j < params->m(); ++j) {
          std::snprintf(buf, sizeof buf, " %.12g", params->C[static_cast<std::size_t>(g)](i, j));
          out << buf;
        }
      }
      out << "\n";
    }
  }
  if (causality) {
    out << "causal: " << (causality->causal ? "yes" : "no") << "\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "causal-margin: %.12g\n", causality->margin);
    out << buf;
    out << "pencil-eigenvalues:";
    for (const auto& ev : causality->eigenvalues) {
      std::snprintf(buf, sizeof buf, " %.12g%+.12gi", ev.real(), ev.imag());
      out << buf;
    }
    out << "\n";
    out << "det-nonzero-generic: " << (causality->det_nonzero_generic ? "yes" : "no") << "\n";
    if (!causality->reason.empty()) out << "reason: " << causality->reason << "\n";
  }
  return out.str();
}

}  // namespace fxpde
