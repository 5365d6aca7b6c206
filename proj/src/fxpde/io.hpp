#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fxpde/grid.hpp"

namespace fxpde {

/// Binary field dump: magic "FXPD", version u32, component count u32, axis
/// count u32, per axis (padded u32, interior u32, spacing f64 LE), then the
/// row-major f64 LE samples of every component over the padded grid.
void write_field_binary(const std::filesystem::path& path, const FieldArray& field,
                        const SpaceTimeGrid& grid);
FieldArray read_field_binary(const std::filesystem::path& path, SpaceTimeGrid* grid_out = nullptr,
                             const SpaceTimeGrid* expect_grid = nullptr);

/// CSV export of the interior cells: t,x[,y,z],component,value with %.17g
/// formatting (byte-stable for identical inputs).
void write_field_csv(const std::filesystem::path& path, const FieldArray& field,
                     const SpaceTimeGrid& grid);

/// Plain key: value report lines in a fixed order.
void write_report(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& entries);

std::string format_double(double v);  // %.17g

}  // namespace fxpde
