#include "fxpde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fxpde {

void SolverConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(rel_tolerance > 0)) throw std::invalid_argument("rel_tolerance must be positive");
  if (!(damping > 0) || damping > 1) throw std::invalid_argument("damping must be in (0, 1]");
  if (!(divergence_factor > 1)) throw std::invalid_argument("divergence_factor must be > 1");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (anderson_depth < 0) throw std::invalid_argument("anderson_depth must be >= 0");
}

std::string face_name(const Face& f) {
  static const char* names[3][2] = {{"left", "right"}, {"bottom", "top"}, {"back", "front"}};
  return names[f.axis - 1][f.high ? 1 : 0];
}

std::optional<Face> parse_face_name(std::string_view name, int dim) {
  for (int axis = 1; axis <= dim; ++axis)
    for (int side = 0; side < 2; ++side) {
      Face f{axis, side == 1};
      if (face_name(f) == name) return f;
    }
  return std::nullopt;
}

void ProblemSpec::validate() const {
  domain.validate();
  if (domain.components != system.m)
    throw std::invalid_argument("domain.components must match the equation count");
  if (domain.spatial_dim != system.dim)
    throw std::invalid_argument("domain and system dimensions disagree");
  system.validate();
  solver.validate();
  if (static_cast<int>(initial_exprs.size()) != system.m)
    throw std::invalid_argument("one initial expression per component required");
  for (const auto& e : initial_exprs)
    for (const auto& v : e.variables())
      if (v != "x" && !(v == "y" && domain.spatial_dim >= 2) &&
          !(v == "z" && domain.spatial_dim >= 3))
        throw std::invalid_argument("initial data may only reference spatial coordinates, got " + v);
  for (int axis = 1; axis <= domain.spatial_dim; ++axis)
    for (int side = 0; side < 2; ++side) {
      const Face f{axis, side == 1};
      auto it = boundary_exprs.find(f);
      if (it == boundary_exprs.end())
        throw std::invalid_argument("missing boundary data for face " + face_name(f));
      if (static_cast<int>(it->second.size()) != system.m)
        throw std::invalid_argument("face " + face_name(f) + " needs one expression per component");
      for (const auto& e : it->second)
        for (const auto& v : e.variables()) {
          const bool coord_ok =
              v == "t" || (v == "x" && axis != 1) ||
              (v == "y" && axis != 2 && domain.spatial_dim >= 2) ||
              (v == "z" && axis != 3 && domain.spatial_dim >= 3);
          if (!coord_ok)
            throw std::invalid_argument("face " + face_name(f) +
                                        " data may only use t and in-face coordinates, got " + v);
        }
    }
  if (params && (params->m() != system.m || params->groups() != system.groups()))
    throw std::invalid_argument("parameter blocks do not match the system shape");
  if (static_cast<int>(default_resolution.size()) != domain.axes() &&
      !default_resolution.empty())
    throw std::invalid_argument("default_resolution needs one entry per axis");
}

// ---------------------------------------------------------------------------
// problem file parsing

namespace {

struct Line {
  int number;
  std::string text;
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

Eigen::MatrixXd parse_matrix(const std::string& text, int m, int line) {
  // rows separated by ';', entries by whitespace
  Eigen::MatrixXd M(m, m);
  std::vector<std::string> rows;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) rows.push_back(item);
  if (static_cast<int>(rows.size()) != m)
    throw ProblemParseError(line, 1, "expected " + std::to_string(m) + " matrix rows");
  for (int i = 0; i < m; ++i) {
    std::stringstream rs(rows[static_cast<std::size_t>(i)]);
    for (int j = 0; j < m; ++j)
      if (!(rs >> M(i, j)))
        throw ProblemParseError(line, 1, "expected " + std::to_string(m) + " entries per matrix row");
    double extra;
    if (rs >> extra) throw ProblemParseError(line, 1, "too many entries in matrix row");
  }
  return M;
}

}  // namespace

ProblemSpec parse_problem_text(const std::string& text, const std::string& name) {
  ProblemSpec spec;
  spec.name = name;

  // collect key=value pairs per section
  struct Entry {
    std::string key, value;
    int line, column;
  };
  std::map<std::string, std::vector<Entry>> sections;
  std::vector<std::string> section_order;
  {
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    std::string current;
    while (std::getline(in, raw)) {
      ++lineno;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ProblemParseError(lineno, static_cast<int>(raw.size()), "unterminated section header");
        current = line.substr(1, line.size() - 2);
        if (!sections.count(current)) section_order.push_back(current);
        sections[current];
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ProblemParseError(lineno, 1, "expected key = value");
      if (current.empty())
        throw ProblemParseError(lineno, 1, "entry outside any [section]");
      Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno,
              static_cast<int>(raw.find('=')) + 2};
      if (e.key.empty()) throw ProblemParseError(lineno, 1, "empty key");
      sections[current].push_back(std::move(e));
    }
  }

  auto section = [&](const std::string& s) -> const std::vector<Entry>& {
    auto it = sections.find(s);
    if (it == sections.end())
      throw ProblemParseError(1, 1, "missing required section [" + s + "]");
    return it->second;
  };

  // [domain]
  spec.domain.spatial_dim = 0;
  int components_given = -1;
  for (const auto& e : section("domain")) {
    try {
      if (e.key == "dim")
        spec.domain.spatial_dim = std::stoi(e.value);
      else if (e.key == "horizon")
        spec.domain.horizon = std::stod(e.value);
      else if (e.key == "extent_x")
        spec.domain.extents[0] = std::stod(e.value);
      else if (e.key == "extent_y")
        spec.domain.extents[1] = std::stod(e.value);
      else if (e.key == "extent_z")
        spec.domain.extents[2] = std::stod(e.value);
      else if (e.key == "components")
        components_given = std::stoi(e.value);
      else
        throw ProblemParseError(e.line, 1, "unknown [domain] key '" + e.key + "'");
    } catch (const std::invalid_argument&) {
      throw ProblemParseError(e.line, e.column, "malformed value for '" + e.key + "'");
    }
  }
  if (spec.domain.spatial_dim == 0) throw ProblemParseError(1, 1, "[domain] needs dim");
  const int dim = spec.domain.spatial_dim;

  // [system]: one "slot = expr" line per equation
  auto& sys = spec.system;
  sys.dim = dim;
  for (const auto& e : section("system")) {
    const auto slot = parse_slot_name(e.key);
    if (!slot || !slot_in_dimension(*slot, dim))
      throw ProblemParseError(e.line, 1, "left-hand side '" + e.key + "' is not a slot name");
    sys.lhs.push_back(*slot);
    try {
      sys.rhs_exprs.push_back(Expression::parse(e.value));
    } catch (const ParseError& pe) {
      throw ProblemParseError(e.line, e.column + static_cast<int>(pe.offset), pe.what());
    }
  }
  sys.m = static_cast<int>(sys.lhs.size());
  if (sys.m == 0) throw ProblemParseError(1, 1, "[system] lists no equations");
  if (components_given >= 0 && components_given != sys.m)
    throw ProblemParseError(1, 1, "components does not match the number of equations");
  spec.domain.components = sys.m;
  sys.rhs_order = canonical_rhs_order(sys.m, dim, sys.lhs);

  // [initial]
  spec.initial_exprs.resize(static_cast<std::size_t>(sys.m));
  for (const auto& e : section("initial")) {
    const auto slot = parse_slot_name(e.key);
    if (!slot || slot->kind != SlotKind::Value || slot->comp >= sys.m)
      throw ProblemParseError(e.line, 1, "initial data key must be a component name like u1");
    try {
      spec.initial_exprs[static_cast<std::size_t>(slot->comp)] = Expression::parse(e.value);
    } catch (const ParseError& pe) {
      throw ProblemParseError(e.line, e.column + static_cast<int>(pe.offset), pe.what());
    }
  }
  for (int c = 0; c < sys.m; ++c)
    if (spec.initial_exprs[static_cast<std::size_t>(c)].empty())
      throw ProblemParseError(1, 1, "missing initial data for u" + std::to_string(c + 1));

  // [boundary.<face>]
  for (const auto& name_entry : section_order) {
    if (name_entry.rfind("boundary.", 0) != 0) continue;
    const std::string fname = name_entry.substr(9);
    const auto face = parse_face_name(fname, dim);
    if (!face) throw ProblemParseError(1, 1, "unknown boundary face '" + fname + "'");
    auto& exprs = spec.boundary_exprs[*face];
    exprs.resize(static_cast<std::size_t>(sys.m));
    for (const auto& e : sections[name_entry]) {
      const auto slot = parse_slot_name(e.key);
      if (!slot || slot->kind != SlotKind::Value || slot->comp >= sys.m)
        throw ProblemParseError(e.line, 1, "boundary data key must be a component name like u1");
      try {
        exprs[static_cast<std::size_t>(slot->comp)] = Expression::parse(e.value);
      } catch (const ParseError& pe) {
        throw ProblemParseError(e.line, e.column + static_cast<int>(pe.offset), pe.what());
      }
    }
    for (int c = 0; c < sys.m; ++c)
      if (exprs[static_cast<std::size_t>(c)].empty())
        throw ProblemParseError(1, 1, "face " + fname + " misses data for u" + std::to_string(c + 1));
  }

  // [params] (optional): auto = true, scalars a b c d, or matrices C1..C4
  if (sections.count("params")) {
    bool is_auto = false;
    std::array<double, 4> abcd{0, 0, 0, 0};
    std::array<bool, 4> have_scalar{false, false, false, false};
    std::vector<std::optional<Eigen::MatrixXd>> blocks(static_cast<std::size_t>(sys.groups()));
    for (const auto& e : sections["params"]) {
      if (e.key == "auto") {
        is_auto = (e.value == "true" || e.value == "yes" || e.value == "1");
      } else if (e.key == "a" || e.key == "b" || e.key == "c" || e.key == "d") {
        const int g = e.key[0] - 'a';
        try {
          abcd[static_cast<std::size_t>(g)] = std::stod(e.value);
        } catch (const std::invalid_argument&) {
          throw ProblemParseError(e.line, e.column, "malformed scalar parameter");
        }
        have_scalar[static_cast<std::size_t>(g)] = true;
      } else if (e.key.size() == 2 && e.key[0] == 'C' && e.key[1] >= '1' && e.key[1] <= '4') {
        const int g = e.key[1] - '1';
        if (g >= sys.groups())
          throw ProblemParseError(e.line, 1, "parameter block " + e.key + " beyond the dimension");
        blocks[static_cast<std::size_t>(g)] = parse_matrix(e.value, sys.m, e.line);
      } else {
        throw ProblemParseError(e.line, 1, "unknown [params] key '" + e.key + "'");
      }
    }
    const bool any_scalar = have_scalar[0] || have_scalar[1] || have_scalar[2] || have_scalar[3];
    const bool any_block = std::any_of(blocks.begin(), blocks.end(),
                                       [](const auto& b) { return b.has_value(); });
    if (!is_auto && (any_scalar || any_block)) {
      if (any_scalar && sys.m != 1)
        throw ProblemParseError(1, 1, "scalar parameters a/b/c/d require a single equation");
      ParameterSet p = ParameterSet::zeros(sys.m, sys.groups());
      for (int g = 0; g < sys.groups(); ++g) {
        if (blocks[static_cast<std::size_t>(g)])
          p.C[static_cast<std::size_t>(g)] = *blocks[static_cast<std::size_t>(g)];
        else if (g < 4 && have_scalar[static_cast<std::size_t>(g)])
          p.C[static_cast<std::size_t>(g)](0, 0) = abcd[static_cast<std::size_t>(g)];
      }
      spec.params = std::move(p);
    }
  }

  // [solver] (optional)
  if (sections.count("solver")) {
    for (const auto& e : sections["solver"]) {
      try {
        if (e.key == "max_iterations")
          spec.solver.max_iterations = std::stoi(e.value);
        else if (e.key == "rel_tolerance")
          spec.solver.rel_tolerance = std::stod(e.value);
        else if (e.key == "damping")
          spec.solver.damping = std::stod(e.value);
        else if (e.key == "divergence_factor")
          spec.solver.divergence_factor = std::stod(e.value);
        else if (e.key == "window")
          spec.solver.window = std::stoi(e.value);
        else if (e.key == "anderson_depth")
          spec.solver.anderson_depth = std::stoi(e.value);
        else if (e.key == "resolution") {
          std::stringstream rs(e.value);
          int n;
          spec.default_resolution.clear();
          while (rs >> n) spec.default_resolution.push_back(n);
        } else if (e.key == "pad_time")
          spec.pad_time = std::stod(e.value);
        else if (e.key == "pad_space")
          spec.pad_space = std::stod(e.value);
        else if (e.key == "oracle_threshold")
          spec.oracle_threshold = std::stod(e.value);
        else
          throw ProblemParseError(e.line, 1, "unknown [solver] key '" + e.key + "'");
      } catch (const std::invalid_argument&) {
        throw ProblemParseError(e.line, e.column, "malformed value for '" + e.key + "'");
      }
    }
  }

  for (const auto& s : section_order) {
    if (s == "domain" || s == "system" || s == "initial" || s == "params" || s == "solver")
      continue;
    if (s.rfind("boundary.", 0) == 0) continue;
    throw ProblemParseError(1, 1, "unknown section [" + s + "]");
  }

  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ProblemParseError(1, 1, e.what());
  }
  return spec;
}

ProblemSpec load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str(), path.stem().string());
}

ProblemSpec load_problem(const std::string& ref) {
  if (ref.rfind("builtin:", 0) == 0) return builtin(ref.substr(8));
  return load_problem_file(ref);
}

// ---------------------------------------------------------------------------
// builtin registry

namespace {

ProblemSpec make_problem(const std::string& name, const std::string& text) {
  ProblemSpec p = parse_problem_text(text, name);
  return p;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"transport",        "reaction_linear", "reaction_cubic",
          "burgers",          "hamilton_jacobi_1d", "heat_reduced_1d"};
}

ProblemSpec builtin(std::string_view name) {
  if (name == "transport") {
    // u_t = -u_x, decaying bump advected to the right; inflow and outflow
    // faces carry the translated bump exactly.
    return make_problem("transport", R"(
[domain]
dim = 1
extent_x = 1.0
horizon = 0.5
[system]
u1_t = -u1_x
[initial]
u1 = exp(-200*(x - 0.4)^2)
[boundary.left]
u1 = exp(-200*(-t - 0.4)^2)
[boundary.right]
u1 = exp(-200*(0.6 - t)^2)
[solver]
resolution = 256 256
rel_tolerance = 1e-9
max_iterations = 200
)");
  }
  if (name == "reaction_linear") {
    return make_problem("reaction_linear", R"(
[domain]
dim = 1
extent_x = 1.0
horizon = 0.5
[system]
u1_t = u1
[initial]
u1 = sin(3.14159265358979324*x)
[boundary.left]
u1 = 0
[boundary.right]
u1 = 0
[solver]
resolution = 128 128
rel_tolerance = 1e-9
max_iterations = 300
damping = 0.8
)");
  }
  if (name == "reaction_cubic") {
    // u_t = u - u^3; boundary values follow the logistic-type closed form
    // for the initial value 0.5 shared by both faces.
    return make_problem("reaction_cubic", R"(
[domain]
dim = 1
extent_x = 1.0
horizon = 0.5
[system]
u1_t = u1 - u1^3
[initial]
u1 = 0.5 + 0.25*sin(6.28318530717958648*x)
[boundary.left]
u1 = 0.5/sqrt(0.25 + 0.75*exp(-2*t))
[boundary.right]
u1 = 0.5/sqrt(0.25 + 0.75*exp(-2*t))
[solver]
resolution = 128 128
rel_tolerance = 1e-9
max_iterations = 300
damping = 0.8
)");
  }
  if (name == "burgers") {
    // bump over a 0.5 background; the horizon is half the shock time
    // 1/max(-u0') of this initial profile. The box is two units wide: the
    // residual coupling (u - mean) u_x amplifies by roughly
    // xi_max * T * max|u - mean| per sweep, and the wider box keeps that
    // subcritical at the 256-cell acceptance resolution.
    return make_problem("burgers", R"(
[domain]
dim = 1
extent_x = 2.0
horizon = 0.2332
[system]
u1_t = -u1*u1_x
[initial]
u1 = 0.5 + 0.25*exp(-100*(x - 0.7)^2)
[boundary.left]
u1 = 0.5
[boundary.right]
u1 = 0.5
[solver]
resolution = 256 256
rel_tolerance = 1e-9
max_iterations = 2000
damping = 0.5
)");
  }
  if (name == "hamilton_jacobi_1d") {
    // u_t + H(u_x) = 0 with the quadratic hamiltonian H(p) = p^2/2.
    return make_problem("hamilton_jacobi_1d", R"(
[domain]
dim = 1
extent_x = 1.0
horizon = 0.25
[system]
u1_t = -0.5*u1_x^2
[initial]
u1 = 0.25*cos(6.28318530717958648*x)
[boundary.left]
u1 = 0.25
[boundary.right]
u1 = 0.25
[solver]
resolution = 128 128
rel_tolerance = 1e-9
max_iterations = 500
damping = 0.7
)");
  }
  if (name == "heat_reduced_1d") {
    // Heat equation written as the first-order pair u1_t = u2_x, u2 = u1_x
    // (equation 2 resolved with respect to the component u2). The shipped
    // parameters keep the time pencil invertible with a small u2_t
    // regularization.
    return make_problem("heat_reduced_1d", R"(
[domain]
dim = 1
extent_x = 1.0
horizon = 0.5
[system]
u1_t = u2_x
u2 = u1_x
[initial]
u1 = sin(3.14159265358979324*x)
u2 = 3.14159265358979324*cos(3.14159265358979324*x)
[boundary.left]
u1 = 0
u2 = 3.14159265358979324*exp(-9.86960440108935862*t)
[boundary.right]
u1 = 0
u2 = -3.14159265358979324*exp(-9.86960440108935862*t)
[params]
C1 = -2 0 ; 0 -0.005
C2 = 0 1 ; 1 0
[solver]
resolution = 128 128
rel_tolerance = 1e-9
max_iterations = 400
damping = 0.9
oracle_threshold = 0.10
)");
  }
  throw std::invalid_argument("unknown builtin problem '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// parameter auto-selection

ParameterSet auto_parameters(const ProblemSpec& problem, const ReductionPlan& plan) {
  const int m = plan.m();
  const int groups = plan.system.groups();
  ParameterSet params = ParameterSet::zeros(m, groups);
  params.C[0] = -(1.0 / problem.domain.horizon) * Eigen::MatrixXd::Identity(m, m);

  // Base state: mean of the initial data per component, zero derivatives,
  // box center, mid horizon. Sampled on a fixed coarse lattice.
  std::vector<double> mean_u(static_cast<std::size_t>(m), 0.0);
  {
    const int n = 33;
    const int dim = problem.domain.spatial_dim;
    std::vector<double> coords(3, 0.0);
    long count = 0;
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (;;) {
      for (int a = 0; a < dim; ++a)
        coords[static_cast<std::size_t>(a)] =
            (idx[static_cast<std::size_t>(a)] + 0.5) / n * problem.domain.extents[a];
      for (int c = 0; c < m; ++c) {
        const auto& expr = problem.initial_exprs[static_cast<std::size_t>(c)];
        std::vector<double> vals(expr.variables().size(), 0.0);
        for (std::size_t v = 0; v < expr.variables().size(); ++v) {
          const auto& nm = expr.variables()[v];
          if (nm == "x") vals[v] = coords[0];
          if (nm == "y") vals[v] = coords[1];
          if (nm == "z") vals[v] = coords[2];
        }
        EvalEnv env{vals};
        const double val = expr.eval(env);
        if (!env.fault && std::isfinite(val)) mean_u[static_cast<std::size_t>(c)] += val;
      }
      ++count;
      int a = dim - 1;
      for (; a >= 0; --a) {
        if (++idx[static_cast<std::size_t>(a)] < n) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
      if (a < 0) break;
    }
    for (auto& v : mean_u) v /= static_cast<double>(count);
  }

  // Jacobian of f with respect to the derivative slot groups by central
  // differences around the base state.
  const auto& sys = plan.system;
  const int zc = plan.zcols();
  std::vector<double> base(static_cast<std::size_t>(zc), 0.0);
  for (int k = 0; k < zc; ++k) {
    const SlotId& s = sys.rhs_order[static_cast<std::size_t>(k)];
    if (s.kind == SlotKind::Value) base[static_cast<std::size_t>(k)] = mean_u[static_cast<std::size_t>(s.comp)];
  }
  auto eval_f = [&](int j, const std::vector<double>& slot_vals) {
    const auto& expr = sys.rhs_exprs[static_cast<std::size_t>(j)];
    std::vector<double> vals(expr.variables().size(), 0.0);
    for (std::size_t v = 0; v < expr.variables().size(); ++v) {
      const auto& nm = expr.variables()[v];
      if (nm == "x") vals[v] = 0.5 * problem.domain.extents[0];
      else if (nm == "y") vals[v] = 0.5 * problem.domain.extents[1];
      else if (nm == "z") vals[v] = 0.5 * problem.domain.extents[2];
      else if (nm == "t") vals[v] = 0.5 * problem.domain.horizon;
      else {
        const auto slot = parse_slot_name(nm);
        const int pos = plan.slot_index(*slot);
        vals[v] = pos >= 0 ? slot_vals[static_cast<std::size_t>(pos)] : 0.0;
      }
    }
    EvalEnv env{vals};
    const double out = expr.eval(env);
    return env.fault ? std::numeric_limits<double>::quiet_NaN() : out;
  };

  const double h = 1e-5;
  for (int g = 1; g < groups; ++g) {
    for (int k = 0; k < m; ++k) {
      const int col = g * m + k;
      for (int j = 0; j < m; ++j) {
        std::vector<double> lo = base, hi = base;
        hi[static_cast<std::size_t>(col)] += h;
        lo[static_cast<std::size_t>(col)] -= h;
        const double d = (eval_f(j, hi) - eval_f(j, lo)) / (2 * h);
        params.C[static_cast<std::size_t>(g)](j, k) = std::isfinite(d) ? d : 0.0;
      }
    }
  }
  return params;
}

ParameterSet resolve_parameters(const ProblemSpec& problem, const ReductionPlan& plan) {
  if (problem.params) return *problem.params;
  return auto_parameters(problem, plan);
}

}  // namespace fxpde
