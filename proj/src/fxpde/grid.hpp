#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace fxpde {

/// Axis-aligned space-time box: [0,T] x [0,L1] x ... with m unknown components.
/// Axis 0 is always time; axes 1..spatial_dim are x, y, z.
struct DomainSpec {
  int spatial_dim = 1;                       // 1, 2 or 3
  std::array<double, 3> extents = {1, 0, 0}; // L_i, spatial_dim entries used
  double horizon = 1.0;                      // T
  int components = 1;                        // m

  int axes() const { return spatial_dim + 1; }
  double extent(int axis) const { return axis == 0 ? horizon : extents[axis - 1]; }
  void validate() const; // throws std::invalid_argument
};

/// Uniform cell-centered discretization of the padded box. Per axis the
/// interior covers [0, extent) with `resolution` cells; `padded - resolution`
/// extra cells are appended above. Padded length is always >= 2x resolution
/// so circular convolutions act as linear ones on the interior.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid() = default;

  int axes() const { return static_cast<int>(resolution_.size()); }
  int resolution(int axis) const { return resolution_[axis]; }
  int padded(int axis) const { return padded_[axis]; }
  int pad_cells(int axis) const { return padded_[axis] - resolution_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double extent(int axis) const { return domain_.extent(axis); }
  /// Coordinate of a cell center.
  double coord(int axis, std::int64_t idx) const {
    return (static_cast<double>(idx) + 0.5) * spacing_[axis];
  }
  /// Signed angular frequencies of the padded axis (DFT layout, negative
  /// branch above the Nyquist index).
  const std::vector<double>& frequencies(int axis) const { return freq_[axis]; }

  std::int64_t cell_count() const { return cells_; }
  std::int64_t interior_count() const { return interior_cells_; }
  std::int64_t stride(int axis) const { return stride_[axis]; }
  double cell_volume() const { return cell_volume_; }
  const DomainSpec& domain() const { return domain_; }

  void unflatten(std::int64_t flat, int* idx) const {
    for (int a = 0; a < axes(); ++a) {
      idx[a] = static_cast<int>(flat / stride_[a]);
      flat %= stride_[a];
    }
  }
  bool is_interior(std::int64_t flat) const {
    for (int a = 0; a < axes(); ++a) {
      if (flat / stride_[a] >= resolution_[a]) return false;
      flat %= stride_[a];
    }
    return true;
  }

  friend SpaceTimeGrid build_grid(const DomainSpec&, const std::vector<int>&,
                                  const std::vector<double>&);

 private:
  DomainSpec domain_;
  std::vector<int> resolution_;
  std::vector<int> padded_;
  std::vector<double> spacing_;
  std::vector<std::vector<double>> freq_;
  std::vector<std::int64_t> stride_;
  std::int64_t cells_ = 0;
  std::int64_t interior_cells_ = 0;
  double cell_volume_ = 0;
};

/// Builds the grid. `resolution` lists per-axis interior cell counts
/// (time first), each >= 4. `pad_factors` gives the per-axis padded/interior
/// ratio; lengths below the 2x floor are raised to it. A single-element
/// vector applies the same factor to every axis.
SpaceTimeGrid build_grid(const DomainSpec& domain, const std::vector<int>& resolution,
                         const std::vector<double>& pad_factors);
SpaceTimeGrid build_grid(const DomainSpec& domain, const std::vector<int>& resolution,
                         double pad_factor);

/// Real samples over the padded grid, one contiguous block per component.
struct FieldArray {
  int components = 0;
  std::int64_t cells = 0;
  std::vector<double> values;

  static FieldArray zeros(const SpaceTimeGrid& grid, int components) {
    FieldArray f;
    f.components = components;
    f.cells = grid.cell_count();
    f.values.assign(static_cast<std::size_t>(components) * f.cells, 0.0);
    return f;
  }
  std::span<double> component(int c) {
    return {values.data() + static_cast<std::size_t>(c) * cells, static_cast<std::size_t>(cells)};
  }
  std::span<const double> component(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * cells, static_cast<std::size_t>(cells)};
  }
  bool all_finite() const;
};

/// Complex samples over the padded frequency grid, shape-congruent to the
/// padded SpaceTimeGrid.
struct SpectralArray {
  int components = 0;
  std::int64_t cells = 0;
  std::vector<std::complex<double>> values;

  static SpectralArray zeros(const SpaceTimeGrid& grid, int components) {
    SpectralArray s;
    s.components = components;
    s.cells = grid.cell_count();
    s.values.assign(static_cast<std::size_t>(components) * s.cells, {0.0, 0.0});
    return s;
  }
  std::span<std::complex<double>> component(int c) {
    return {values.data() + static_cast<std::size_t>(c) * cells, static_cast<std::size_t>(cells)};
  }
  std::span<const std::complex<double>> component(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * cells, static_cast<std::size_t>(cells)};
  }
};

/// 0/1 samples marking the interior box (cell centers inside Omega x (0,T)).
class IndicatorMask {
 public:
  IndicatorMask() = default;
  explicit IndicatorMask(const SpaceTimeGrid& grid);

  const std::vector<std::uint8_t>& values() const { return values_; }
  std::uint8_t operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
  std::int64_t ones_count() const { return ones_; }

  /// field *= mask, every component.
  void apply(FieldArray& field) const;

 private:
  std::vector<std::uint8_t> values_;
  std::int64_t ones_ = 0;
};

/// Grid L2 norm sqrt(sum f^2 * dV) over all padded cells (or a region).
double grid_norm(const FieldArray& field, const SpaceTimeGrid& grid);
double grid_norm_region(const FieldArray& field, const SpaceTimeGrid& grid,
                        std::span<const std::uint8_t> region);

}  // namespace fxpde
