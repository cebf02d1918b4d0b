#pragma once

#include "smpp/error.hpp"
#include "smpp/geometry.hpp"
#include "smpp/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace smpp {

/// Regular grid geometry. Cell (ix, iy) spans
/// [x0 + ix*dx, x0 + (ix+1)*dx] x [y0 + iy*dy, y0 + (iy+1)*dy].
struct GridGeometry {
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  std::size_t nx = 1;
  std::size_t ny = 1;

  std::size_t cells() const noexcept { return nx * ny; }
  Rect extent() const noexcept {
    return {x0, x0 + static_cast<double>(nx) * dx, y0, y0 + static_cast<double>(ny) * dy};
  }
  Point cell_center(std::size_t ix, std::size_t iy) const noexcept {
    return {x0 + (static_cast<double>(ix) + 0.5) * dx, y0 + (static_cast<double>(iy) + 0.5) * dy};
  }
  Point cell_center(std::size_t cell) const noexcept { return cell_center(cell % nx, cell / nx); }

  /// Grid of nx by ny cells exactly covering `r`.
  static GridGeometry covering(const Rect& r, std::size_t nx, std::size_t ny) {
    return {r.x_min, r.y_min, r.width() / static_cast<double>(nx), r.height() / static_cast<double>(ny), nx, ny};
  }

  void validate() const {
    if (!(dx > 0.0) || !(dy > 0.0)) throw InputError("raster cell sizes must be positive");
    if (nx == 0 || ny == 0) throw InputError("raster dimensions must be at least 1");
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Piecewise-constant field on a regular grid. Values are stored row by row
/// with row 0 at the smallest y.
class RasterField {
 public:
  RasterField() = default;
  RasterField(GridGeometry geometry, std::vector<double> values)
      : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != geometry_.cells()) {
      throw InputError("raster has " + std::to_string(values_.size()) + " values, expected " +
                       std::to_string(geometry_.cells()));
    }
  }
  static RasterField constant(GridGeometry geometry, double value) {
    return RasterField(geometry, std::vector<double>(geometry.cells(), value));
  }

  const GridGeometry& geometry() const noexcept { return geometry_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  double at(std::size_t ix, std::size_t iy) const noexcept { return values_[iy * geometry_.nx + ix]; }
  double& at(std::size_t ix, std::size_t iy) noexcept { return values_[iy * geometry_.nx + ix]; }

  bool covers(const Rect& r) const noexcept {
    const Rect e = geometry_.extent();
    return e.x_min <= r.x_min && e.x_max >= r.x_max && e.y_min <= r.y_min && e.y_max >= r.y_max;
  }

  /// Index of the cell containing u (the nearest cell centre); u on a shared
  /// edge belongs to the upper cell except on the outer boundary.
  std::size_t cell_index(const Point& u) const {
    const Rect e = geometry_.extent();
    if (!e.contains(u)) {
      throw InputError("location (" + detail::format_double(u.x) + ", " + detail::format_double(u.y) +
                       ") outside raster extent");
    }
    const auto ix = std::min(static_cast<std::size_t>((u.x - geometry_.x0) / geometry_.dx), geometry_.nx - 1);
    const auto iy = std::min(static_cast<std::size_t>((u.y - geometry_.y0) / geometry_.dy), geometry_.ny - 1);
    return iy * geometry_.nx + ix;
  }

  double lookup(const Point& u) const { return values_[cell_index(u)]; }

  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

inline double field_lookup(const RasterField& f, const Point& u) { return f.lookup(u); }

// Raster text format: one JSON header line
//   {"origin":[x0,y0],"dx":..,"dy":..,"n_x":..,"n_y":..}
// followed by n_y lines of n_x comma-separated values, smallest y first.

inline void write_raster(std::ostream& out, const RasterField& f) {
  const auto& g = f.geometry();
  nlohmann::json header = {{"origin", {g.x0, g.y0}}, {"dx", g.dx}, {"dy", g.dy}, {"n_x", g.nx}, {"n_y", g.ny}};
  out << header.dump() << '\n';
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      if (ix) out << ',';
      out << detail::format_double(f.at(ix, iy));
    }
    out << '\n';
  }
}

inline void save_raster(const std::string& path, const RasterField& f) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write raster '" + path + "'");
  write_raster(out, f);
}

inline RasterField read_raster(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(name + ": empty raster file");
  GridGeometry g;
  try {
    const auto header = nlohmann::json::parse(line);
    for (const auto& [key, _] : header.items()) {
      if (key != "origin" && key != "dx" && key != "dy" && key != "n_x" && key != "n_y") {
        throw InputError(name + ": unknown raster header key '" + key + "'");
      }
    }
    g.x0 = header.at("origin").at(0).get<double>();
    g.y0 = header.at("origin").at(1).get<double>();
    g.dx = header.at("dx").get<double>();
    g.dy = header.at("dy").get<double>();
    g.nx = header.at("n_x").get<std::size_t>();
    g.ny = header.at("n_y").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(name + ": bad raster header: " + e.what());
  }
  g.validate();
  std::vector<double> values;
  values.reserve(g.cells());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != g.nx) {
      throw InputError(name + ": raster row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " values, expected " + std::to_string(g.nx));
    }
    for (const auto f : fields) values.push_back(detail::parse_double(f, name));
    ++row;
  }
  if (row != g.ny) {
    throw InputError(name + ": raster has " + std::to_string(row) + " rows, expected " + std::to_string(g.ny));
  }
  return RasterField(g, std::move(values));
}

inline RasterField load_raster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open raster '" + path + "'");
  return read_raster(in, path);
}

}  // namespace smpp
