#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "fxpde/problem.hpp"
#include "fxpde/transform.hpp"

namespace fxpde {

/// Sampled initial and boundary data. The final-time slice is never stored:
/// with a causal kernel it cannot influence the interior window, so the
/// time-boundary term uses -A1 alone.
struct BoundaryData {
  int components = 0;
  /// u|_{t=0} sampled at interior spatial cell centers, [c][spatial cell].
  std::vector<std::vector<double>> initial;
  /// Per face: u on the face sampled over (time x in-face) interior cell
  /// centers, [face][c][cell]; cell index runs time-major.
  struct FaceData {
    Face face;
    std::vector<std::vector<double>> values;
  };
  std::vector<FaceData> faces;
  /// Largest initial-vs-boundary mismatch at a face corner (t -> 0+).
  double compatibility_gap = 0.0;
};

/// Evaluates the problem's data expressions on the grid. Warns (via the
/// returned gap) when face data at t -> 0+ disagrees with the initial data.
BoundaryData sample_boundary_data(const ProblemSpec& problem, const SpaceTimeGrid& grid);

/// Boundary-data spectra, one m-component SpectralArray per axis:
///   g0 = spatial transform of (-A1), constant along the time frequency;
///   gk = sum over the two k-faces of n_k * A3 transformed over time and the
///        in-face coordinates, with the normal coordinate evaluated at the
///        exact face position.
struct BoundarySpectra {
  std::vector<SpectralArray> g;  // size axes
};
BoundarySpectra boundary_spectra(const BoundaryData& bd, const SpaceTimeGrid& grid);

/// Frequencies where |det B1| fell below the threshold.
struct SingularMask {
  std::vector<std::uint8_t> masked;
  std::int64_t masked_count = 0;
  double fraction() const {
    return masked.empty() ? 0.0 : static_cast<double>(masked_count) / static_cast<double>(masked.size());
  }
};

struct KernelMetadata {
  double eps_sing = 0;
  double masked_fraction = 0;
  bool mask_warning = false;       // masked fraction above 1e-3
  double tail_bound = 0;           // exp(-margin * T_pad/2): wrapped-tail size
  double w1_imag_residue = 0;
  double causal_margin = 0;        // from the validating report
  std::uint64_t plan_hash = 0;
};

/// The pair driving the fixed-point equation: w1 in physical space and the
/// source kernel kept in frequency space (its rows carry i*xi factors, so a
/// raw physical-space version would be distributional; realizations happen
/// only behind a smoothing window in causality_check).
struct KernelPair {
  FieldArray w1;          // zcols components
  SpectralArray w2_hat;   // zcols*m components, row-major (row*m + col)
  SingularMask mask;
  KernelMetadata meta;
};

/// Per-frequency inversion of the symbol: w1 = Re F^-1[B1^-1 beta1 (1-I_C)],
/// w2_hat = B1^-1 B2 with the same masking. Refuses non-causal parameters.
/// Nyquist planes of the spectral products are zeroed so real data yields
/// real fields.
KernelPair synthesize_kernels(const ReductionPlan& plan, const ParameterSet& params,
                              const BoundarySpectra& spectra, const SpaceTimeGrid& grid,
                              double eps_sing, const CausalityReport& causality,
                              const Transformer* transformer = nullptr, int threads = 1);

/// Closed form of the causal frequency integral
///   (1/2pi) int (i xi + lambda)^-n e^{i t xi} dxi
///   = e^{-lambda t} t^(n-1)/(n-1)!  for t >= 0, 0 for t < 0,
/// valid for Re(lambda) > 0. Rejects Re(lambda) <= 0.
std::complex<double> jordan_inverse_transform(std::complex<double> lambda, int n, double t);

/// Realizes each w2 column behind a raised-cosine band-limit window and
/// integrates |.| over t < 0. The pass threshold combines the hard 1e-6
/// floor, the smoothing leak (the window smears the t = 0 jump over a few
/// cells, contributing O(rate * dt)), and the wrapped decay tail reported in
/// the kernel metadata.
struct CausalityCheck {
  std::vector<double> column_mass;  // per kernel column, relative |mass| at t < 0
  double worst = 0;
  double threshold = 0;
  bool pass = false;
};
CausalityCheck causality_check(const KernelPair& kernels, const SpaceTimeGrid& grid,
                               const Transformer* transformer = nullptr);

/// Binary kernel cache (bit-exact reload).
void save_kernel_cache(const std::filesystem::path& path, const KernelPair& kernels,
                       const SpaceTimeGrid& grid);
KernelPair load_kernel_cache(const std::filesystem::path& path, const SpaceTimeGrid& grid);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ull);
std::uint64_t plan_parameter_hash(const ReductionPlan& plan, const ParameterSet& params,
                                  double eps_sing);

}  // namespace fxpde
