// Command-line front end: validate / solve / compare / kernels.
//
// Exit codes: 0 success (validate: causal; solve: converged; compare: error
// below threshold), 2 parse or usage errors, 3 non-causal parameters,
// 4 divergence (artifacts still written), 5 numeric or I/O faults.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "fxpde/fixedpoint.hpp"
#include "fxpde/io.hpp"
#include "fxpde/oracles.hpp"

namespace fs = std::filesystem;
using namespace fxpde;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
  kOk = 0,
  kParseError = 2,
  kNonCausal = 3,
  kDiverged = 4,
  kNumericFault = 5,
};

struct RunSetup {
  ProblemSpec problem;
  ReductionPlan plan;
  ParameterSet params;
  SpaceTimeGrid grid;
  CausalityReport causality;
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

RunSetup prepare(const std::string& problem_ref, const std::vector<int>& resolution,
                 const std::vector<double>& pads) {
  RunSetup s;
  s.problem = load_problem(problem_ref);
  s.plan = build_plan(s.problem.system);
  s.params = resolve_parameters(s.problem, s.plan);

  std::vector<int> res = resolution;
  if (res.empty()) res = s.problem.default_resolution;
  if (res.empty()) res.assign(static_cast<std::size_t>(s.problem.domain.axes()), 64);
  if (static_cast<int>(res.size()) == 1)
    res.assign(static_cast<std::size_t>(s.problem.domain.axes()), res[0]);

  std::vector<double> pad = pads;
  if (pad.empty()) {
    pad.assign(static_cast<std::size_t>(s.problem.domain.axes()), s.problem.pad_space);
    pad[0] = s.problem.pad_time;
  } else if (pad.size() == 2 && s.problem.domain.axes() > 2) {
    std::vector<double> full(static_cast<std::size_t>(s.problem.domain.axes()), pad[1]);
    full[0] = pad[0];
    pad = full;
  }
  s.grid = build_grid(s.problem.domain, res, pad);
  s.causality = validate_parameters(s.plan, s.params);
  return s;
}

std::string manifest_text(const RunSetup& s, const SolverConfig& config, int threads) {
  std::ostringstream out;
  out << "tool-version: " << kToolVersion << "\n";
  out << "problem: " << s.problem.name << "\n";
  out << s.plan.debug_dump(&s.params, &s.causality);
  out << "resolution:";
  for (int a = 0; a < s.grid.axes(); ++a) out << " " << s.grid.resolution(a);
  out << "\npadded:";
  for (int a = 0; a < s.grid.axes(); ++a) out << " " << s.grid.padded(a);
  out << "\nsolver: max_iterations=" << config.max_iterations
      << " rel_tolerance=" << format_double(config.rel_tolerance)
      << " damping=" << format_double(config.damping)
      << " divergence_factor=" << format_double(config.divergence_factor)
      << " window=" << config.window << " anderson_depth=" << config.anderson_depth << "\n";
  out << "threads: " << threads << "\n";
  return out.str();
}

struct SolveArtifacts {
  PicardSolution solution;
  ExtractedSolution extracted;
  KernelPair kernels;
  double oracle_error = -1;
};

SolveArtifacts run_solve(const RunSetup& s, const SolverConfig& config, int threads) {
  SolveArtifacts a;
  Transformer transformer(s.grid);
  const BoundaryData bd = sample_boundary_data(s.problem, s.grid);
  if (bd.compatibility_gap > 0.05)
    std::cerr << "warning: initial/boundary data mismatch at a corner (gap "
              << bd.compatibility_gap << ")\n";
  const BoundarySpectra spectra = boundary_spectra(bd, s.grid);
  a.kernels = synthesize_kernels(s.plan, s.params, spectra, s.grid, 0.0, s.causality,
                                 &transformer, threads);
  if (a.kernels.meta.mask_warning)
    std::cerr << "warning: " << a.kernels.meta.masked_fraction
              << " of frequencies masked as singular\n";
  a.solution = picard_solve(a.kernels, s.problem, s.plan, s.params, s.grid, config, transformer);
  if (std::getenv("FXPDE_TRACE")) {
    std::cerr << "update norms:";
    for (double v : a.solution.report.update_norms) std::cerr << " " << v;
    std::cerr << "\n";
  }
  const IndicatorMask mask(s.grid);
  a.extracted = extract_solution(a.solution.z1, s.problem, s.plan, s.params, s.grid, mask);
  return a;
}

void write_solve_outputs(const fs::path& dir, const RunSetup& s, const SolverConfig& config,
                         const SolveArtifacts& a, int threads) {
  fs::create_directories(dir);
  write_field_binary(dir / "u.fxpd", a.extracted.u, s.grid);
  write_field_csv(dir / "u.csv", a.extracted.u, s.grid);
  write_field_binary(dir / "z1.fxpd", a.extracted.derivatives, s.grid);

  const auto& rep = a.solution.report;
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("problem", s.problem.name);
  entries.emplace_back("iterations", std::to_string(rep.iterations));
  entries.emplace_back("converged", rep.converged ? "true" : "false");
  entries.emplace_back("update_norm_final", format_double(rep.update_norm_final));
  entries.emplace_back("contraction_ratio", format_double(rep.contraction_ratio));
  entries.emplace_back("interior_residual", format_double(rep.interior_residual));
  entries.emplace_back("exterior_residual", format_double(rep.exterior_residual));
  entries.emplace_back("masked_fraction", format_double(a.kernels.meta.masked_fraction));
  entries.emplace_back("tail_bound", format_double(a.kernels.meta.tail_bound));
  entries.emplace_back("w1_imag_residue", format_double(a.kernels.meta.w1_imag_residue));
  if (a.oracle_error >= 0) entries.emplace_back("oracle_error", format_double(a.oracle_error));
  entries.emplace_back("wall_time_ms", format_double(rep.wall_time_ms));
  write_report(dir / "report.txt", entries);

  std::ofstream manifest(dir / "manifest.txt");
  manifest << manifest_text(s, config, threads);
  const std::string mt = manifest_text(s, config, threads);
  manifest << "manifest-hash: " << std::hex << fnv1a64(mt.data(), mt.size()) << std::dec << "\n";
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  manifest << "timestamp-unix-ms: "
           << std::chrono::duration_cast<std::chrono::milliseconds>(now).count() << "\n";
}

int cmd_validate(const std::string& problem_ref) {
  RunSetup s;
  try {
    s = prepare(problem_ref, {}, {});
  } catch (const ProblemParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  }
  std::cout << s.plan.debug_dump(&s.params, &s.causality);
  if (!s.causality.causal) {
    std::cerr << "non-causal parameter set: " << s.causality.reason << "\n";
    return kNonCausal;
  }
  return kOk;
}

int cmd_solve(const std::string& problem_ref, const std::vector<int>& resolution,
              const std::vector<double>& pads, double tol, int max_iter, double damping,
              int anderson, const std::string& out_dir, int threads,
              const std::string& kernels_out) {
  RunSetup s;
  try {
    s = prepare(problem_ref, resolution, pads);
  } catch (const ProblemParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  }
  if (!s.causality.causal) {
    std::cerr << "non-causal parameter set: " << s.causality.reason << "\n";
    return kNonCausal;
  }
  SolverConfig config = s.problem.solver;
  if (tol > 0) config.rel_tolerance = tol;
  if (max_iter > 0) config.max_iterations = max_iter;
  if (damping > 0) config.damping = damping;
  if (anderson >= 0) config.anderson_depth = anderson;

  try {
    SolveArtifacts a = run_solve(s, config, threads);
    if (a.solution.report.fault) {
      std::cerr << "numeric fault: " << a.solution.report.fault_what << "\n";
      return kNumericFault;
    }
    if (!a.solution.report.residual_bound_ok)
      std::cerr << "warning: converged run exceeds the interior-residual bound\n";
    write_solve_outputs(out_dir, s, config, a, threads);
    if (!kernels_out.empty()) save_kernel_cache(kernels_out, a.kernels, s.grid);
    std::cout << "iterations: " << a.solution.report.iterations
              << "  converged: " << (a.solution.report.converged ? "true" : "false")
              << "  exterior_residual: " << a.solution.report.exterior_residual << "\n";
    if (!a.solution.report.converged) return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "fault: " << e.what() << "\n";
    return kNumericFault;
  }
  return kOk;
}

int cmd_compare(const std::string& problem_ref, const std::string& oracle_name,
                const std::string& resolutions, const std::vector<double>& pads,
                const std::string& out_path, double threshold_override, int threads) {
  std::vector<int> res_list;
  try {
    res_list = parse_int_list(resolutions);
  } catch (const std::exception&) {
    std::cerr << "bad --resolutions list\n";
    return kParseError;
  }

  ProblemSpec probe;
  try {
    probe = load_problem(problem_ref);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  }
  if (probe.domain.spatial_dim != 1) {
    std::cerr << "compare supports 1D problems\n";
    return kParseError;
  }

  // oracle applicability
  const bool is_transport = probe.name == "transport";
  const bool is_burgers = probe.name == "burgers";
  const bool is_reaction = probe.name == "reaction_linear" || probe.name == "reaction_cubic";
  const bool is_heat = probe.name == "heat_reduced_1d";
  bool applicable = false;
  if (oracle_name == "characteristics") applicable = is_transport || is_burgers;
  else if (oracle_name == "ode") applicable = is_reaction;
  else if (oracle_name == "fd") applicable = is_transport || is_burgers || is_reaction || is_heat;
  else {
    std::cerr << "unknown oracle '" << oracle_name << "'\n";
    return kParseError;
  }
  if (!applicable) {
    std::cerr << "oracle '" << oracle_name << "' does not apply to problem '" << probe.name
              << "'\n";
    return kParseError;
  }
  const double threshold = threshold_override > 0 ? threshold_override : probe.oracle_threshold;

  std::ostringstream csv;
  csv << "resolution,L2_error,Linf_error,valid_fraction,iterations\n";
  bool all_ok = true;
  for (int n : res_list) {
    RunSetup s;
    try {
      s = prepare(problem_ref, std::vector<int>{n, n}, pads);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kParseError;
    }
    if (!s.causality.causal) {
      std::cerr << "non-causal parameter set\n";
      return kNonCausal;
    }
    try {
      SolveArtifacts a = run_solve(s, s.problem.solver, threads);
      OracleResult oracle;
      if (oracle_name == "characteristics" && is_transport)
        oracle = characteristics_transport(s.problem.initial_exprs[0], 1.0,
                                           s.problem.boundary_exprs.at(Face{1, false})[0], s.grid);
      else if (oracle_name == "characteristics")
        oracle = characteristics_burgers(s.problem.initial_exprs[0], s.grid);
      else if (oracle_name == "ode")
        oracle = ode_pointwise(s.problem.system.rhs_exprs[0], s.problem.initial_exprs[0], s.grid);
      else {
        // FD reference on its own stability-limited grid, then sampled back
        SpaceTimeGrid fd_grid = s.grid;
        if (is_heat) {
          const double dx = s.grid.spacing(1);
          const int nt = std::max(s.grid.resolution(0),
                                  static_cast<int>(std::ceil(s.grid.extent(0) / (0.4 * dx * dx))));
          fd_grid = build_grid(s.problem.domain, {nt, s.grid.resolution(1)},
                               std::vector<double>{2.0, 2.0});
        }
        OracleResult fine = finite_difference_reference(s.problem, fd_grid);
        if (is_heat) {
          // interpolate the fine-time reference onto the solve grid centers
          oracle.method = fine.method;
          oracle.u_ref = FieldArray::zeros(s.grid, 1);
          oracle.validity.assign(static_cast<std::size_t>(s.grid.cell_count()), 0);
          auto dst = oracle.u_ref.component(0);
          auto src = fine.u_ref.component(0);
          for (int it = 0; it < s.grid.resolution(0); ++it) {
            const double t = s.grid.coord(0, it);
            const double f = t / fd_grid.spacing(0) - 0.5;
            const int j0 = std::max(0, std::min(fd_grid.resolution(0) - 2,
                                                static_cast<int>(std::floor(f))));
            const double w = std::clamp(f - j0, 0.0, 1.0);
            for (int ix = 0; ix < s.grid.resolution(1); ++ix) {
              const std::int64_t cell = it * s.grid.stride(0) + ix;
              dst[cell] = (1 - w) * src[j0 * fd_grid.stride(0) + ix] +
                          w * src[(j0 + 1) * fd_grid.stride(0) + ix];
              oracle.validity[static_cast<std::size_t>(cell)] = 1;
            }
          }
        } else {
          oracle = std::move(fine);
        }
      }
      const ErrorNorms err = compare_to_oracle(a.extracted.u, 0, oracle, s.grid);
      csv << n << ',' << format_double(err.l2) << ',' << format_double(err.linf) << ','
          << format_double(err.valid_fraction) << ',' << a.solution.report.iterations << '\n';
      std::cout << "resolution " << n << ": L2 " << err.l2 << "  Linf " << err.linf
                << "  valid " << err.valid_fraction << "  iterations "
                << a.solution.report.iterations << "\n";
      if (!(err.l2 <= threshold)) all_ok = false;
    } catch (const CflError& e) {
      std::cerr << "oracle refused: " << e.what() << "\n";
      return kParseError;
    } catch (const std::exception& e) {
      std::cerr << "fault: " << e.what() << "\n";
      return kNumericFault;
    }
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << csv.str();
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return kNumericFault;
    }
  }
  return all_ok ? kOk : kDiverged;
}

int cmd_kernels(const std::string& problem_ref, const std::vector<int>& resolution,
                const std::vector<double>& pads, const std::string& out_path,
                const std::string& inspect_path, int threads) {
  if (!inspect_path.empty()) {
    // header-only inspection without a grid: reopen via a prepared grid
    RunSetup s;
    try {
      s = prepare(problem_ref, resolution, pads);
      const KernelPair k = load_kernel_cache(inspect_path, s.grid);
      std::cout << "plan-hash: " << std::hex << k.meta.plan_hash << std::dec << "\n"
                << "masked-fraction: " << k.meta.masked_fraction << "\n"
                << "tail-bound: " << k.meta.tail_bound << "\n"
                << "w1-imag-residue: " << k.meta.w1_imag_residue << "\n"
                << "causal-margin: " << k.meta.causal_margin << "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kNumericFault;
    }
    return kOk;
  }
  RunSetup s;
  try {
    s = prepare(problem_ref, resolution, pads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  }
  if (!s.causality.causal) {
    std::cerr << "non-causal parameter set: " << s.causality.reason << "\n";
    return kNonCausal;
  }
  try {
    Transformer transformer(s.grid);
    const BoundaryData bd = sample_boundary_data(s.problem, s.grid);
    const BoundarySpectra spectra = boundary_spectra(bd, s.grid);
    const KernelPair kernels = synthesize_kernels(s.plan, s.params, spectra, s.grid, 0.0,
                                                  s.causality, &transformer, threads);
    const CausalityCheck check = causality_check(kernels, s.grid, &transformer);
    std::cout << "masked-fraction: " << kernels.meta.masked_fraction << "\n"
              << "tail-bound: " << kernels.meta.tail_bound << "\n"
              << "causality-mass-worst: " << check.worst << "\n"
              << "causality-threshold: " << check.threshold << "\n"
              << "causality-pass: " << (check.pass ? "true" : "false") << "\n";
    if (!out_path.empty()) save_kernel_cache(out_path, kernels, s.grid);
    return check.pass ? kOk : kNumericFault;
  } catch (const std::exception& e) {
    std::cerr << "fault: " << e.what() << "\n";
    return kNumericFault;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolution fixed-point solver for first-order PDE systems"};
  app.require_subcommand(1);

  std::string problem_ref;
  std::string resolution_arg, pad_arg = "";
  std::string out_dir = "out", out_path, inspect_path, oracle_name, resolutions = "64";
  double tol = -1, damping = -1, threshold = -1;
  int max_iter = -1, anderson = -1, threads = 1;
  long seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("problem", problem_ref, "problem file or builtin:<name>")->required();
    cmd->add_option("--resolution", resolution_arg, "per-axis cell counts, e.g. 256,256");
    cmd->add_option("--pad", pad_arg, "pad factors: time[,space]");
    cmd->add_option("--threads", threads, "worker threads (1 = bitwise deterministic)");
    cmd->add_option("--seed", seed, "seed for randomized utilities (unused by the core)");
  };

  CLI::App* validate = app.add_subcommand("validate", "build the plan and check causality");
  add_common(validate);

  CLI::App* solve = app.add_subcommand("solve", "run the fixed-point solver");
  add_common(solve);
  solve->add_option("--tol", tol, "relative update tolerance");
  solve->add_option("--max-iter", max_iter, "iteration budget");
  solve->add_option("--damping", damping, "Picard damping in (0,1]");
  solve->add_option("--anderson", anderson, "Anderson mixing depth (0 = plain Picard)");
  solve->add_option("--out", out_dir, "output directory");
  solve->add_option("--kernels-out", out_path, "also write the kernel cache here");

  CLI::App* compare = app.add_subcommand("compare", "solve and compare against an oracle");
  add_common(compare);
  compare->add_option("--oracle", oracle_name, "characteristics | ode | fd")->required();
  compare->add_option("--resolutions", resolutions, "comma list of grid sizes");
  compare->add_option("--out", out_path, "CSV output path");
  compare->add_option("--threshold", threshold, "override the acceptance threshold");

  CLI::App* kernels = app.add_subcommand("kernels", "synthesize, check and cache kernels");
  add_common(kernels);
  kernels->add_option("--out", out_path, "kernel cache output path");
  kernels->add_option("--inspect", inspect_path, "print the header of an existing cache");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kParseError;
  }

  std::vector<int> resolution;
  std::vector<double> pads;
  try {
    if (!resolution_arg.empty()) resolution = parse_int_list(resolution_arg);
    if (!pad_arg.empty()) {
      std::stringstream ss(pad_arg);
      std::string item;
      while (std::getline(ss, item, ',')) pads.push_back(std::stod(item));
    }
  } catch (const std::exception&) {
    std::cerr << "bad --resolution/--pad list\n";
    return kParseError;
  }

  if (validate->parsed()) return cmd_validate(problem_ref);
  if (solve->parsed())
    return cmd_solve(problem_ref, resolution, pads, tol, max_iter, damping, anderson, out_dir,
                     threads, out_path);
  if (compare->parsed())
    return cmd_compare(problem_ref, oracle_name, resolutions, pads, out_path, threshold, threads);
  if (kernels->parsed())
    return cmd_kernels(problem_ref, resolution, pads, out_path, inspect_path, threads);
  return kParseError;
}
