#include "fxpde/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fxpde {

namespace {
constexpr char kFieldMagic[4] = {'F', 'X', 'P', 'D'};
constexpr std::uint32_t kFieldVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
}
}  // namespace

void write_field_binary(const std::filesystem::path& path, const FieldArray& field,
                        const SpaceTimeGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write field dump: " + path.string());
  out.write(kFieldMagic, 4);
  write_pod(out, kFieldVersion);
  write_pod(out, static_cast<std::uint32_t>(field.components));
  write_pod(out, static_cast<std::uint32_t>(grid.axes()));
  for (int a = 0; a < grid.axes(); ++a) {
    write_pod(out, static_cast<std::uint32_t>(grid.padded(a)));
    write_pod(out, static_cast<std::uint32_t>(grid.resolution(a)));
    write_pod(out, grid.spacing(a));
  }
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write to field dump: " + path.string());
}

FieldArray read_field_binary(const std::filesystem::path& path, SpaceTimeGrid* grid_out,
                             const SpaceTimeGrid* expect_grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open field dump: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kFieldMagic, 4) != 0)
    throw std::runtime_error("not a field dump: " + path.string());
  std::uint32_t version, comps, naxes;
  read_pod(in, version);
  if (version != kFieldVersion) throw std::runtime_error("unsupported field dump version");
  read_pod(in, comps);
  read_pod(in, naxes);
  std::int64_t cells = 1;
  std::vector<std::uint32_t> padded(naxes), interior(naxes);
  std::vector<double> spacing(naxes);
  for (std::uint32_t a = 0; a < naxes; ++a) {
    read_pod(in, padded[a]);
    read_pod(in, interior[a]);
    read_pod(in, spacing[a]);
    cells *= padded[a];
  }
  if (expect_grid) {
    if (static_cast<int>(naxes) != expect_grid->axes())
      throw std::runtime_error("field dump grid mismatch (axes)");
    for (std::uint32_t a = 0; a < naxes; ++a)
      if (static_cast<int>(padded[a]) != expect_grid->padded(static_cast<int>(a)) ||
          static_cast<int>(interior[a]) != expect_grid->resolution(static_cast<int>(a)))
        throw std::runtime_error("field dump grid mismatch (axis " + std::to_string(a) + ")");
  }
  if (grid_out) {
    DomainSpec dom;
    dom.spatial_dim = static_cast<int>(naxes) - 1;
    dom.horizon = spacing[0] * interior[0];
    for (std::uint32_t a = 1; a < naxes; ++a) dom.extents[a - 1] = spacing[a] * interior[a];
    dom.components = static_cast<int>(comps);
    std::vector<int> res(interior.begin(), interior.end());
    std::vector<double> pads(naxes);
    for (std::uint32_t a = 0; a < naxes; ++a)
      pads[a] = static_cast<double>(padded[a]) / static_cast<double>(interior[a]);
    *grid_out = build_grid(dom, res, pads);
  }
  FieldArray field;
  field.components = static_cast<int>(comps);
  field.cells = cells;
  field.values.resize(static_cast<std::size_t>(comps) * static_cast<std::size_t>(cells));
  in.read(reinterpret_cast<char*>(field.values.data()),
          static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("short read from field dump: " + path.string());
  return field;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(const std::filesystem::path& path, const FieldArray& field,
                     const SpaceTimeGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV: " + path.string());
  const int naxes = grid.axes();
  out << "t,x";
  if (naxes > 2) out << ",y";
  if (naxes > 3) out << ",z";
  out << ",component,value\n";
  int idx[4];
  for (std::int64_t i = 0; i < grid.cell_count(); ++i) {
    if (!grid.is_interior(i)) continue;
    grid.unflatten(i, idx);
    std::string prefix;
    for (int a = 0; a < naxes; ++a) {
      prefix += format_double(grid.coord(a, idx[a]));
      prefix += ',';
    }
    for (int c = 0; c < field.components; ++c)
      out << prefix << (c + 1) << ',' << format_double(field.component(c)[i]) << '\n';
  }
  if (!out) throw std::runtime_error("short write to CSV: " + path.string());
}

void write_report(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  for (const auto& [key, value] : entries) out << key << ": " << value << "\n";
  if (!out) throw std::runtime_error("short write to report: " + path.string());
}

}  // namespace fxpde
