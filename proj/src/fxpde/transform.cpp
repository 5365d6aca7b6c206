#include "fxpde/transform.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fxpde {

struct FftEngine::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::vector<std::complex<double>> scratch;
};

FftEngine::FftEngine(const SpaceTimeGrid& grid) : impl_(new Impl) {
  std::vector<int> dims(grid.axes());
  for (int a = 0; a < grid.axes(); ++a) dims[a] = grid.padded(a);
  impl_->scratch.assign(static_cast<std::size_t>(grid.cell_count()), {0, 0});
  auto* p = reinterpret_cast<fftw_complex*>(impl_->scratch.data());
  // FFTW_ESTIMATE keeps planning deterministic and leaves the buffer intact.
  impl_->fwd = fftw_plan_dft(grid.axes(), dims.data(), p, p, FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  impl_->bwd = fftw_plan_dft(grid.axes(), dims.data(), p, p, FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!impl_->fwd || !impl_->bwd) throw std::runtime_error("fftw plan creation failed");
}

FftEngine::~FftEngine() {
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

void FftEngine::execute(std::complex<double>* data, int sign) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(sign < 0 ? impl_->fwd : impl_->bwd, p, p);
}

Transformer::Transformer(const SpaceTimeGrid& grid)
    : grid_(&grid), engine_(std::make_shared<FftEngine>(grid)) {
  phase_.resize(grid.axes());
  for (int a = 0; a < grid.axes(); ++a) {
    const auto& xi = grid.frequencies(a);
    phase_[a].resize(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) {
      const double arg = -xi[k] * grid.spacing(a) * 0.5;  // cell-center shift
      phase_[a][k] = {std::cos(arg), std::sin(arg)};
    }
  }
}

namespace {

// Applies prod_a phase[a][idx_a]^dir entrywise to one component.
void apply_phases(std::complex<double>* data, const SpaceTimeGrid& g,
                  const std::vector<std::vector<std::complex<double>>>& phase, int dir) {
  const int naxes = g.axes();
  int idx[4] = {0, 0, 0, 0};
  const std::int64_t n = g.cell_count();
  for (std::int64_t i = 0; i < n; ++i) {
    std::complex<double> p = phase[0][idx[0]];
    for (int a = 1; a < naxes; ++a) p *= phase[a][idx[a]];
    data[i] *= (dir > 0) ? p : std::conj(p);
    // advance multi-index (last axis fastest)
    for (int a = naxes - 1; a >= 0; --a) {
      if (++idx[a] < g.padded(a)) break;
      idx[a] = 0;
    }
  }
}

}  // namespace

SpectralArray Transformer::forward(const FieldArray& field, const IndicatorMask& mask) const {
  if (field.cells != grid_->cell_count()) throw std::invalid_argument("field/grid shape mismatch");
  if (static_cast<std::int64_t>(mask.values().size()) != grid_->cell_count())
    throw std::invalid_argument("mask/grid shape mismatch");
  SpectralArray out = SpectralArray::zeros(*grid_, field.components);
  const double dv = grid_->cell_volume();
  for (int c = 0; c < field.components; ++c) {
    auto in = field.component(c);
    auto buf = out.component(c);
    for (std::int64_t i = 0; i < field.cells; ++i)
      buf[i] = mask[i] ? std::complex<double>(in[i] * dv, 0.0) : std::complex<double>(0.0, 0.0);
    engine_->execute(buf.data(), -1);
    apply_phases(buf.data(), *grid_, phase_, +1);
  }
  return out;
}

SpectralArray Transformer::forward_raw(const FieldArray& field) const {
  if (field.cells != grid_->cell_count()) throw std::invalid_argument("field/grid shape mismatch");
  SpectralArray out = SpectralArray::zeros(*grid_, field.components);
  const double dv = grid_->cell_volume();
  for (int c = 0; c < field.components; ++c) {
    auto in = field.component(c);
    auto buf = out.component(c);
    for (std::int64_t i = 0; i < field.cells; ++i) buf[i] = {in[i] * dv, 0.0};
    engine_->execute(buf.data(), -1);
    apply_phases(buf.data(), *grid_, phase_, +1);
  }
  return out;
}

FieldArray Transformer::inverse(const SpectralArray& spec, double* imag_residue) const {
  if (spec.cells != grid_->cell_count()) throw std::invalid_argument("spectrum/grid shape mismatch");
  FieldArray out = FieldArray::zeros(*grid_, spec.components);
  const double scale = 1.0 / (grid_->cell_volume() * static_cast<double>(grid_->cell_count()));
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(spec.cells));
  double max_im = 0, max_re = 0;
  for (int c = 0; c < spec.components; ++c) {
    auto in = spec.component(c);
    std::copy(in.begin(), in.end(), buf.begin());
    apply_phases(buf.data(), *grid_, phase_, -1);
    engine_->execute(buf.data(), +1);
    auto dst = out.component(c);
    for (std::int64_t i = 0; i < spec.cells; ++i) {
      const std::complex<double> v = buf[static_cast<std::size_t>(i)] * scale;
      dst[i] = v.real();
      max_im = std::max(max_im, std::abs(v.imag()));
      max_re = std::max(max_re, std::abs(v.real()));
    }
  }
  if (imag_residue) *imag_residue = max_re > 0 ? max_im / max_re : max_im;
  return out;
}

SpectralArray forward_transform(const FieldArray& field, const IndicatorMask& mask,
                                const SpaceTimeGrid& grid) {
  return Transformer(grid).forward(field, mask);
}

FieldArray inverse_transform(const SpectralArray& spec, const SpaceTimeGrid& grid,
                             double* imag_residue) {
  return Transformer(grid).inverse(spec, imag_residue);
}

double spectral_norm(const SpectralArray& spec, const SpaceTimeGrid& grid) {
  double dxi_over_2pi = 1.0;
  for (int a = 0; a < grid.axes(); ++a)
    dxi_over_2pi /= grid.padded(a) * grid.spacing(a);
  double s = 0;
  for (const auto& v : spec.values) s += std::norm(v);
  return std::sqrt(s * dxi_over_2pi);
}

}  // namespace fxpde
