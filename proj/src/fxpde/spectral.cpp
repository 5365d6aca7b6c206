#include "fxpde/spectral.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <thread>

namespace fxpde {

namespace {

double eval_with_coords(const Expression& expr, const double* coords /*x,y,z,t*/) {
  std::vector<double> vals(expr.variables().size(), 0.0);
  for (std::size_t v = 0; v < expr.variables().size(); ++v) {
    const auto& nm = expr.variables()[v];
    if (nm == "x") vals[v] = coords[0];
    else if (nm == "y") vals[v] = coords[1];
    else if (nm == "z") vals[v] = coords[2];
    else if (nm == "t") vals[v] = coords[3];
  }
  EvalEnv env{vals};
  const double out = expr.eval(env);
  if (env.fault) throw std::runtime_error("boundary/initial data fault: " + env.fault_what);
  return out;
}

void for_each_parallel(std::int64_t n, int threads, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (threads <= 1 || n < 1024) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t begin = t * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

BoundaryData sample_boundary_data(const ProblemSpec& problem, const SpaceTimeGrid& grid) {
  const int m = problem.system.m;
  const int dim = problem.domain.spatial_dim;
  BoundaryData bd;
  bd.components = m;

  // initial data over the interior spatial box
  std::int64_t spatial_cells = 1;
  for (int a = 1; a <= dim; ++a) spatial_cells *= grid.resolution(a);
  bd.initial.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(spatial_cells)));
  {
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (std::int64_t i = 0; i < spatial_cells; ++i) {
      double coords[4] = {0, 0, 0, 0};
      for (int a = 0; a < dim; ++a) coords[a] = grid.coord(a + 1, idx[static_cast<std::size_t>(a)]);
      for (int c = 0; c < m; ++c)
        bd.initial[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
            eval_with_coords(problem.initial_exprs[static_cast<std::size_t>(c)], coords);
      for (int a = dim - 1; a >= 0; --a) {
        if (++idx[static_cast<std::size_t>(a)] < grid.resolution(a + 1)) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
    }
  }

  // face data over (time x in-face) interior cells
  for (int axis = 1; axis <= dim; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const Face face{axis, side == 1};
      const auto& exprs = problem.boundary_exprs.at(face);
      BoundaryData::FaceData fd;
      fd.face = face;
      std::vector<int> fax;  // in-face axes: time then spatial others
      fax.push_back(0);
      for (int a = 1; a <= dim; ++a)
        if (a != axis) fax.push_back(a);
      std::int64_t cells = 1;
      for (int a : fax) cells *= grid.resolution(a);
      fd.values.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(cells)));
      std::vector<int> idx(fax.size(), 0);
      for (std::int64_t i = 0; i < cells; ++i) {
        double coords[4] = {0, 0, 0, 0};
        coords[axis - 1] = face.high ? grid.extent(axis) : 0.0;  // exact face plane
        for (std::size_t a = 0; a < fax.size(); ++a) {
          const int ax = fax[a];
          const double v = grid.coord(ax, idx[a]);
          if (ax == 0) coords[3] = v;
          else coords[ax - 1] = v;
        }
        for (int c = 0; c < m; ++c)
          fd.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
              eval_with_coords(exprs[static_cast<std::size_t>(c)], coords);
        for (int a = static_cast<int>(fax.size()) - 1; a >= 0; --a) {
          if (++idx[static_cast<std::size_t>(a)] < grid.resolution(fax[static_cast<std::size_t>(a)])) break;
          idx[static_cast<std::size_t>(a)] = 0;
        }
      }
      bd.faces.push_back(std::move(fd));
    }
  }

  // corner compatibility: face data at the first time level vs initial data
  // at the face-adjacent cell.
  double gap = 0.0;
  for (const auto& fd : bd.faces) {
    const int axis = fd.face.axis;
    for (int c = 0; c < m; ++c) {
      double coords[4] = {0, 0, 0, 0};
      coords[axis - 1] = fd.face.high ? grid.extent(axis) - 0.5 * grid.spacing(axis)
                                      : 0.5 * grid.spacing(axis);
      for (int a = 1; a <= dim; ++a)
        if (a != axis) coords[a - 1] = 0.5 * grid.extent(a);
      const double u0 = eval_with_coords(problem.initial_exprs[static_cast<std::size_t>(c)], coords);
      coords[axis - 1] = fd.face.high ? grid.extent(axis) : 0.0;
      coords[3] = grid.coord(0, 0);
      const double ub = eval_with_coords(problem.boundary_exprs.at(fd.face)[static_cast<std::size_t>(c)], coords);
      gap = std::max(gap, std::abs(u0 - ub) / (1.0 + std::abs(u0)));
    }
  }
  bd.compatibility_gap = gap;
  return bd;
}

BoundarySpectra boundary_spectra(const BoundaryData& bd, const SpaceTimeGrid& grid) {
  const int naxes = grid.axes();
  const int dim = naxes - 1;
  const int m = bd.components;
  std::int64_t spatial_cells = 1;
  for (int a = 1; a <= dim; ++a) spatial_cells *= grid.resolution(a);
  if (static_cast<std::int64_t>(bd.initial.at(0).size()) != spatial_cells)
    throw std::invalid_argument("boundary data does not match the grid");

  BoundarySpectra out;
  out.g.reserve(static_cast<std::size_t>(naxes));
  for (int a = 0; a < naxes; ++a) out.g.push_back(SpectralArray::zeros(grid, m));

  // g0: -A1 transformed over space, replicated along the time axis.
  {
    double spatial_vol = 1.0;
    for (int a = 1; a <= dim; ++a) spatial_vol *= grid.spacing(a);
    for (int c = 0; c < m; ++c) {
      auto dst = out.g[0].component(c);
      // direct sum per spatial frequency over interior spatial cells;
      // the spatial lattice is small compared to the full grid.
      std::int64_t freq_cells = 1;
      for (int a = 1; a <= dim; ++a) freq_cells *= grid.padded(a);
      std::vector<std::complex<double>> spatial(static_cast<std::size_t>(freq_cells));
      std::vector<int> fidx(static_cast<std::size_t>(dim), 0);
      for (std::int64_t f = 0; f < freq_cells; ++f) {
        std::complex<double> acc = 0;
        std::vector<int> cidx(static_cast<std::size_t>(dim), 0);
        for (std::int64_t i = 0; i < spatial_cells; ++i) {
          double phase = 0;
          for (int a = 0; a < dim; ++a)
            phase -= grid.frequencies(a + 1)[static_cast<std::size_t>(fidx[static_cast<std::size_t>(a)])] *
                     grid.coord(a + 1, cidx[static_cast<std::size_t>(a)]);
          acc += bd.initial[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] *
                 std::complex<double>(std::cos(phase), std::sin(phase));
          for (int a = dim - 1; a >= 0; --a) {
            if (++cidx[static_cast<std::size_t>(a)] < grid.resolution(a + 1)) break;
            cidx[static_cast<std::size_t>(a)] = 0;
          }
        }
        spatial[static_cast<std::size_t>(f)] = -acc * spatial_vol;
        for (int a = dim - 1; a >= 0; --a) {
          if (++fidx[static_cast<std::size_t>(a)] < grid.padded(a + 1)) break;
          fidx[static_cast<std::size_t>(a)] = 0;
        }
      }
      // replicate across the time frequency axis
      const std::int64_t t_stride = grid.stride(0);
      for (int kt = 0; kt < grid.padded(0); ++kt)
        std::copy(spatial.begin(), spatial.end(), dst.begin() + kt * t_stride);
    }
  }

  // gk: face sums with the exact normal-plane factor.
  for (const auto& fd : bd.faces) {
    const int axis = fd.face.axis;
    const double n_k = fd.face.high ? 1.0 : -1.0;
    const double face_pos = fd.face.high ? grid.extent(axis) : 0.0;
    std::vector<int> fax;  // in-face axes
    fax.push_back(0);
    for (int a = 1; a <= dim; ++a)
      if (a != axis) fax.push_back(a);
    double face_vol = 1.0;
    for (int a : fax) face_vol *= grid.spacing(a);

    // transform the face series over its own axes (direct sums), then place
    // the analytic e^{-i xi_axis * face_pos} factor per normal frequency.
    std::int64_t face_cells = 1;
    for (int a : fax) face_cells *= grid.resolution(a);
    std::int64_t face_freqs = 1;
    for (int a : fax) face_freqs *= grid.padded(a);

    for (int c = 0; c < m; ++c) {
      std::vector<std::complex<double>> face_hat(static_cast<std::size_t>(face_freqs));
      std::vector<int> fidx(fax.size(), 0);
      for (std::int64_t f = 0; f < face_freqs; ++f) {
        std::complex<double> acc = 0;
        std::vector<int> cidx(fax.size(), 0);
        for (std::int64_t i = 0; i < face_cells; ++i) {
          double phase = 0;
          for (std::size_t a = 0; a < fax.size(); ++a)
            phase -= grid.frequencies(fax[a])[static_cast<std::size_t>(fidx[a])] *
                     grid.coord(fax[a], cidx[a]);
          acc += fd.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] *
                 std::complex<double>(std::cos(phase), std::sin(phase));
          for (int a = static_cast<int>(fax.size()) - 1; a >= 0; --a) {
            if (++cidx[static_cast<std::size_t>(a)] < grid.resolution(fax[static_cast<std::size_t>(a)])) break;
            cidx[static_cast<std::size_t>(a)] = 0;
          }
        }
        face_hat[static_cast<std::size_t>(f)] = acc * face_vol;
        for (int a = static_cast<int>(fax.size()) - 1; a >= 0; --a) {
          if (++fidx[static_cast<std::size_t>(a)] < grid.padded(fax[static_cast<std::size_t>(a)])) break;
          fidx[static_cast<std::size_t>(a)] = 0;
        }
      }
      // scatter into the full grid: for every normal-axis frequency k_axis.
      auto dst = out.g[static_cast<std::size_t>(axis)].component(c);
      const auto& xi_n = grid.frequencies(axis);
      std::vector<int> full_idx(static_cast<std::size_t>(naxes), 0);
      for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        // flatten the in-face index
        std::int64_t fflat = 0;
        for (std::size_t a = 0; a < fax.size(); ++a)
          fflat = fflat * grid.padded(fax[a]) + full_idx[static_cast<std::size_t>(fax[a])];
        const double arg = -xi_n[static_cast<std::size_t>(full_idx[static_cast<std::size_t>(axis)])] * face_pos;
        dst[cell] += n_k * face_hat[static_cast<std::size_t>(fflat)] *
                     std::complex<double>(std::cos(arg), std::sin(arg));
        for (int a = naxes - 1; a >= 0; --a) {
          if (++full_idx[static_cast<std::size_t>(a)] < grid.padded(a)) break;
          full_idx[static_cast<std::size_t>(a)] = 0;
        }
      }
    }
  }
  return out;
}

namespace {

// zero every Nyquist plane of one spectral component (only even axes have one)
void zero_nyquist(std::span<std::complex<double>> comp, const SpaceTimeGrid& grid) {
  const int naxes = grid.axes();
  int idx[4];
  for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
    grid.unflatten(i, idx);
    for (int a = 0; a < naxes; ++a) {
      if (grid.padded(a) % 2 == 0 && idx[a] == grid.padded(a) / 2) {
        comp[i] = 0;
        break;
      }
    }
  }
}

}  // namespace

KernelPair synthesize_kernels(const ReductionPlan& plan, const ParameterSet& params,
                              const BoundarySpectra& spectra, const SpaceTimeGrid& grid,
                              double eps_sing, const CausalityReport& causality,
                              const Transformer* transformer, int threads) {
  if (!causality.causal)
    throw std::runtime_error("refusing kernel synthesis for non-causal parameters: " +
                             causality.reason);
  const int m = plan.m();
  const int zc = plan.zcols();
  const int naxes = grid.axes();
  if (static_cast<int>(spectra.g.size()) != naxes)
    throw std::invalid_argument("need one boundary spectrum per axis");

  KernelPair out;
  out.w2_hat = SpectralArray::zeros(grid, zc * m);
  SpectralArray w1_hat = SpectralArray::zeros(grid, zc);
  out.mask.masked.assign(static_cast<std::size_t>(grid.cell_count()), 0);

  const std::int64_t cells = grid.cell_count();

  auto worker = [&](std::int64_t begin, std::int64_t end) {
    int idx[4];
    std::vector<double> xi(static_cast<std::size_t>(naxes));
    Eigen::VectorXcd beta1(zc);
    for (std::int64_t i = begin; i < end; ++i) {
      grid.unflatten(i, idx);
      for (int a = 0; a < naxes; ++a) xi[static_cast<std::size_t>(a)] = grid.frequencies(a)[static_cast<std::size_t>(idx[a])];
      const auto sym = assemble_symbol(plan, params, xi);
      const double eps = eps_sing > 0 ? eps_sing : default_eps_sing(sym.B1);
      const auto inv = invert_symbol(sym.B1, eps);
      if (inv.singular) {
        out.mask.masked[static_cast<std::size_t>(i)] = 1;
        continue;  // masked frequency: kernels stay zero there
      }
      for (int a = 0; a < naxes; ++a)
        for (int c = 0; c < m; ++c)
          beta1(a * m + c) = -spectra.g[static_cast<std::size_t>(a)].component(c)[i];
      const Eigen::VectorXcd w1v = inv.inverse * beta1;
      const Eigen::MatrixXcd w2v = inv.inverse * sym.B2.cast<std::complex<double>>();
      for (int rowi = 0; rowi < zc; ++rowi) {
        w1_hat.component(rowi)[i] = w1v(rowi);
        for (int col = 0; col < m; ++col)
          out.w2_hat.component(rowi * m + col)[i] = w2v(rowi, col);
      }
    }
  };
  for_each_parallel(cells, threads, worker);

  for (auto v : out.mask.masked) out.mask.masked_count += v;
  out.meta.eps_sing = eps_sing;
  out.meta.masked_fraction = out.mask.fraction();
  out.meta.mask_warning = out.meta.masked_fraction > 1e-3;
  out.meta.causal_margin = causality.margin;
  const double t_pad = grid.padded(0) * grid.spacing(0);
  out.meta.tail_bound = std::exp(-causality.margin * 0.5 * t_pad);
  out.meta.plan_hash = plan_parameter_hash(plan, params, eps_sing);

  for (int c = 0; c < zc; ++c) zero_nyquist(w1_hat.component(c), grid);
  for (int c = 0; c < zc * m; ++c) zero_nyquist(out.w2_hat.component(c), grid);

  if (transformer)
    out.w1 = transformer->inverse(w1_hat, &out.meta.w1_imag_residue);
  else
    out.w1 = inverse_transform(w1_hat, grid, &out.meta.w1_imag_residue);
  return out;
}

std::complex<double> jordan_inverse_transform(std::complex<double> lambda, int n, double t) {
  if (!(lambda.real() > 0))
    throw std::invalid_argument("jordan_inverse_transform requires Re(lambda) > 0");
  if (n < 1) throw std::invalid_argument("jordan_inverse_transform requires n >= 1");
  if (t < 0) return {0.0, 0.0};
  double fact = 1.0;
  for (int k = 2; k < n; ++k) fact *= k;
  return std::exp(-lambda * t) * std::pow(t, n - 1) / fact;
}

CausalityCheck causality_check(const KernelPair& kernels, const SpaceTimeGrid& grid,
                               const Transformer* transformer) {
  CausalityCheck out;
  const int comps = kernels.w2_hat.components;
  const std::int64_t cells = grid.cell_count();
  const int pt = grid.padded(0);

  // raised-cosine window per axis
  std::vector<std::vector<double>> window(static_cast<std::size_t>(grid.axes()));
  for (int a = 0; a < grid.axes(); ++a) {
    const auto& xi = grid.frequencies(a);
    double xi_max = 0;
    for (double v : xi) xi_max = std::max(xi_max, std::abs(v));
    window[static_cast<std::size_t>(a)].resize(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k)
      window[static_cast<std::size_t>(a)][k] = 0.5 * (1.0 + std::cos(std::numbers::pi * xi[k] / xi_max));
  }

  std::optional<Transformer> local;
  if (!transformer) {
    local.emplace(grid);
    transformer = &*local;
  }

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cells));
  int idx[4];
  for (int c = 0; c < comps; ++c) {
    auto src = kernels.w2_hat.component(c);
    for (std::int64_t i = 0; i < cells; ++i) {
      grid.unflatten(i, idx);
      double w = 1.0;
      for (int a = 0; a < grid.axes(); ++a) w *= window[static_cast<std::size_t>(a)][static_cast<std::size_t>(idx[a])];
      buf[static_cast<std::size_t>(i)] = src[i] * w;
    }
    // realize at lattice offsets: plain inverse DFT scaled by 1/dV; indices
    // above pt/2 on the time axis are negative offsets.
    transformer->dft(buf.data(), +1);
    const double scale = 1.0 / (grid.cell_volume() * static_cast<double>(cells));
    double neg = 0, total = 0;
    for (std::int64_t i = 0; i < cells; ++i) {
      grid.unflatten(i, idx);
      const double v = std::abs(buf[static_cast<std::size_t>(i)].real()) * scale;
      total += v;
      // the raised-cosine window's time kernel is exactly three cells wide,
      // so offsets at or below -2 cells carry no smoothing leak
      if (idx[0] > pt / 2 && idx[0] <= pt - 2) neg += v;
    }
    out.column_mass.push_back(total > 0 ? neg / total : 0.0);
    out.worst = std::max(out.worst, out.column_mass.back());
  }
  const double rate = std::max(kernels.meta.causal_margin, 0.0);
  out.threshold = 1e-6 + 0.5 * rate * grid.spacing(0) + 4.0 * kernels.meta.tail_bound;
  out.pass = out.worst <= out.threshold;
  return out;
}

// ---------------------------------------------------------------------------
// kernel cache

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t plan_parameter_hash(const ReductionPlan& plan, const ParameterSet& params,
                                  double eps_sing) {
  std::string text = plan.debug_dump(&params);
  std::uint64_t h = fnv1a64(text.data(), text.size());
  h = fnv1a64(&eps_sing, sizeof eps_sing, h);
  return h;
}

namespace {
constexpr char kKernelMagic[4] = {'F', 'X', 'P', 'K'};
constexpr std::uint32_t kKernelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
}
}  // namespace

void save_kernel_cache(const std::filesystem::path& path, const KernelPair& kernels,
                       const SpaceTimeGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write kernel cache: " + path.string());
  out.write(kKernelMagic, 4);
  write_pod(out, kKernelVersion);
  write_pod(out, kernels.meta.eps_sing);
  write_pod(out, kernels.meta.masked_fraction);
  write_pod(out, static_cast<std::uint32_t>(kernels.meta.mask_warning ? 1 : 0));
  write_pod(out, kernels.meta.tail_bound);
  write_pod(out, kernels.meta.w1_imag_residue);
  write_pod(out, kernels.meta.causal_margin);
  write_pod(out, kernels.meta.plan_hash);
  const std::uint32_t naxes = static_cast<std::uint32_t>(grid.axes());
  write_pod(out, naxes);
  for (int a = 0; a < grid.axes(); ++a) {
    write_pod(out, static_cast<std::uint32_t>(grid.padded(a)));
    write_pod(out, static_cast<std::uint32_t>(grid.resolution(a)));
    write_pod(out, grid.spacing(a));
  }
  write_pod(out, static_cast<std::uint32_t>(kernels.w1.components));
  write_pod(out, static_cast<std::uint32_t>(kernels.w2_hat.components));
  out.write(reinterpret_cast<const char*>(kernels.w1.values.data()),
            static_cast<std::streamsize>(kernels.w1.values.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(kernels.w2_hat.values.data()),
            static_cast<std::streamsize>(kernels.w2_hat.values.size() * sizeof(std::complex<double>)));
  out.write(reinterpret_cast<const char*>(kernels.mask.masked.data()),
            static_cast<std::streamsize>(kernels.mask.masked.size()));
  if (!out) throw std::runtime_error("short write to kernel cache: " + path.string());
}

KernelPair load_kernel_cache(const std::filesystem::path& path, const SpaceTimeGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open kernel cache: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kKernelMagic, 4) != 0)
    throw std::runtime_error("not a kernel cache file: " + path.string());
  std::uint32_t version;
  read_pod(in, version);
  if (version != kKernelVersion) throw std::runtime_error("unsupported kernel cache version");
  KernelPair out;
  read_pod(in, out.meta.eps_sing);
  read_pod(in, out.meta.masked_fraction);
  std::uint32_t warn;
  read_pod(in, warn);
  out.meta.mask_warning = warn != 0;
  read_pod(in, out.meta.tail_bound);
  read_pod(in, out.meta.w1_imag_residue);
  read_pod(in, out.meta.causal_margin);
  read_pod(in, out.meta.plan_hash);
  std::uint32_t naxes;
  read_pod(in, naxes);
  if (static_cast<int>(naxes) != grid.axes())
    throw std::runtime_error("kernel cache grid mismatch (axes)");
  for (int a = 0; a < grid.axes(); ++a) {
    std::uint32_t padded, resolution;
    double spacing;
    read_pod(in, padded);
    read_pod(in, resolution);
    read_pod(in, spacing);
    if (static_cast<int>(padded) != grid.padded(a) ||
        static_cast<int>(resolution) != grid.resolution(a) || spacing != grid.spacing(a))
      throw std::runtime_error("kernel cache grid mismatch (axis " + std::to_string(a) + ")");
  }
  std::uint32_t w1c, w2c;
  read_pod(in, w1c);
  read_pod(in, w2c);
  out.w1 = FieldArray::zeros(grid, static_cast<int>(w1c));
  out.w2_hat = SpectralArray::zeros(grid, static_cast<int>(w2c));
  in.read(reinterpret_cast<char*>(out.w1.values.data()),
          static_cast<std::streamsize>(out.w1.values.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(out.w2_hat.values.data()),
          static_cast<std::streamsize>(out.w2_hat.values.size() * sizeof(std::complex<double>)));
  out.mask.masked.resize(static_cast<std::size_t>(grid.cell_count()));
  in.read(reinterpret_cast<char*>(out.mask.masked.data()),
          static_cast<std::streamsize>(out.mask.masked.size()));
  if (!in) throw std::runtime_error("short read from kernel cache: " + path.string());
  out.mask.masked_count = 0;
  for (auto v : out.mask.masked) out.mask.masked_count += v;
  return out;
}

}  // namespace fxpde
