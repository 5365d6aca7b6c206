#include "fxpde/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fxpde {

void DomainSpec::validate() const {
  if (spatial_dim < 1 || spatial_dim > 3)
    throw std::invalid_argument("spatial_dim must be 1, 2 or 3");
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
  for (int i = 0; i < spatial_dim; ++i)
    if (!(extents[i] > 0))
      throw std::invalid_argument("extent " + std::to_string(i + 1) + " must be positive");
  if (components < 1) throw std::invalid_argument("components must be >= 1");
}

SpaceTimeGrid build_grid(const DomainSpec& domain, const std::vector<int>& resolution,
                         const std::vector<double>& pad_factors) {
  domain.validate();
  const int naxes = domain.axes();
  if (static_cast<int>(resolution.size()) != naxes)
    throw std::invalid_argument("resolution needs one entry per axis (time first)");
  if (pad_factors.empty() || (static_cast<int>(pad_factors.size()) != 1 &&
                              static_cast<int>(pad_factors.size()) != naxes))
    throw std::invalid_argument("pad_factors needs 1 or one-per-axis entries");

  SpaceTimeGrid g;
  g.domain_ = domain;
  g.resolution_ = resolution;
  g.padded_.resize(naxes);
  g.spacing_.resize(naxes);
  g.freq_.resize(naxes);
  g.stride_.resize(naxes);

  for (int a = 0; a < naxes; ++a) {
    const int n = resolution[a];
    if (n < 4) throw std::invalid_argument("resolution must be >= 4 per axis");
    const double f = pad_factors[pad_factors.size() == 1 ? 0 : a];
    if (!(f >= 1.0)) throw std::invalid_argument("pad_factor must be >= 1");
    const int padded = std::max(static_cast<int>(std::llround(f * n)), 2 * n);
    g.padded_[a] = padded;
    g.spacing_[a] = domain.extent(a) / n;
    // signed angular frequencies: 2*pi*k/(P*dx), k in DFT order
    auto& xi = g.freq_[a];
    xi.resize(padded);
    const double base = 2.0 * std::numbers::pi / (padded * g.spacing_[a]);
    for (int k = 0; k < padded; ++k) {
      const int signed_k = (k <= (padded - 1) / 2) ? k : k - padded;
      xi[k] = base * signed_k;
    }
  }
  g.cells_ = 1;
  g.interior_cells_ = 1;
  g.cell_volume_ = 1.0;
  for (int a = naxes - 1; a >= 0; --a) {
    g.stride_[a] = g.cells_;
    g.cells_ *= g.padded_[a];
    g.interior_cells_ *= g.resolution_[a];
    g.cell_volume_ *= g.spacing_[a];
  }
  return g;
}

SpaceTimeGrid build_grid(const DomainSpec& domain, const std::vector<int>& resolution,
                         double pad_factor) {
  return build_grid(domain, resolution, std::vector<double>{pad_factor});
}

bool FieldArray::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

IndicatorMask::IndicatorMask(const SpaceTimeGrid& grid) {
  values_.assign(static_cast<std::size_t>(grid.cell_count()), 0);
  for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
    if (grid.is_interior(i)) {
      values_[static_cast<std::size_t>(i)] = 1;
      ++ones_;
    }
  }
}

void IndicatorMask::apply(FieldArray& field) const {
  for (int c = 0; c < field.components; ++c) {
    auto comp = field.component(c);
    for (std::int64_t i = 0; i < field.cells; ++i)
      if (!values_[static_cast<std::size_t>(i)]) comp[i] = 0.0;
  }
}

double grid_norm(const FieldArray& field, const SpaceTimeGrid& grid) {
  double s = 0;
  for (double v : field.values) s += v * v;
  return std::sqrt(s * grid.cell_volume());
}

double grid_norm_region(const FieldArray& field, const SpaceTimeGrid& grid,
                        std::span<const std::uint8_t> region) {
  double s = 0;
  for (int c = 0; c < field.components; ++c) {
    auto comp = field.component(c);
    for (std::int64_t i = 0; i < field.cells; ++i)
      if (region[static_cast<std::size_t>(i)]) s += comp[i] * comp[i];
  }
  return std::sqrt(s * grid.cell_volume());
}

}  // namespace fxpde
