#pragma once

#include <complex>
#include <memory>

#include "fxpde/grid.hpp"

namespace fxpde {

/// Cached FFT plans for one padded grid shape. Executions on distinct
/// buffers are thread-safe; plan creation is not, so build engines up front.
class FftEngine {
 public:
  explicit FftEngine(const SpaceTimeGrid& grid);
  ~FftEngine();
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  void execute(std::complex<double>* data, int sign) const;  // -1 forward, +1 backward

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Transform pair bound to a grid. The forward transform approximates the
/// box-windowed Fourier integral
///   F(f)(xi) = sum_cells f*mask * exp(-i xi . x_center) * dV,
/// so the value at xi = 0 is the Riemann sum of f over Omega x (0,T).
/// The inverse is its exact discrete inverse, which coincides with the
/// cell-centered Riemann sum of (2pi)^-D * int F exp(+i xi . x) dxi over the
/// discrete frequency lattice (the 1/(2pi) factor lives in the inverse).
class Transformer {
 public:
  explicit Transformer(const SpaceTimeGrid& grid);

  const SpaceTimeGrid& grid() const { return *grid_; }

  SpectralArray forward(const FieldArray& field, const IndicatorMask& mask) const;
  /// Forward transform of an already-masked (or unmasked) field.
  SpectralArray forward_raw(const FieldArray& field) const;
  /// Inverse transform; returns the real part and reports the relative
  /// imaginary residue if requested.
  FieldArray inverse(const SpectralArray& spec, double* imag_residue = nullptr) const;

  /// In-place unnormalized DFT of one component buffer.
  void dft(std::complex<double>* data, int sign) const { engine_->execute(data, sign); }

 private:
  const SpaceTimeGrid* grid_;
  std::shared_ptr<FftEngine> engine_;
  std::vector<std::vector<std::complex<double>>> phase_;  // per axis: exp(-i xi dx/2)
};

/// One-shot convenience wrappers (tests, small fields). Shapes must match.
SpectralArray forward_transform(const FieldArray& field, const IndicatorMask& mask,
                                const SpaceTimeGrid& grid);
FieldArray inverse_transform(const SpectralArray& spec, const SpaceTimeGrid& grid,
                             double* imag_residue = nullptr);

/// Frequency-grid L2 norm under the inverse-transform measure
/// (prod dxi / (2pi)^D); equals grid_norm(f*mask) by the Plancherel identity.
double spectral_norm(const SpectralArray& spec, const SpaceTimeGrid& grid);

}  // namespace fxpde
