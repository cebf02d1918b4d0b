#pragma once

#include "smpp/error.hpp"
#include "smpp/geometry.hpp"
#include "smpp/raster.hpp"
#include "smpp/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace smpp {

/// Observation window: a rectangle, optionally restricted by a binary mask
/// (cells with a non-zero value are inside).
class Window {
 public:
  Window() = default;
  explicit Window(Rect rect, std::optional<RasterField> mask = std::nullopt)
      : rect_(rect), mask_(std::move(mask)) {
    if (!(rect_.x_min < rect_.x_max) || !(rect_.y_min < rect_.y_max)) {
      throw InputError("window rectangle must satisfy x_min < x_max and y_min < y_max");
    }
    if (mask_ && !mask_->covers(rect_)) throw InputError("window mask does not cover the window rectangle");
  }

  const Rect& rect() const noexcept { return rect_; }
  const std::optional<RasterField>& mask() const noexcept { return mask_; }

  bool contains(const Point& u) const {
    if (!rect_.contains(u)) return false;
    return !mask_ || mask_->lookup(u) != 0.0;
  }

  /// |W|; with a mask, the total area of valid cells whose centre lies in the rectangle.
  double area() const {
    if (!mask_) return rect_.area();
    const auto& g = mask_->geometry();
    std::size_t valid = 0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      if (mask_->values()[c] != 0.0 && rect_.contains(g.cell_center(c))) ++valid;
    }
    return static_cast<double>(valid) * g.dx * g.dy;
  }

 private:
  Rect rect_;
  std::optional<RasterField> mask_;
};

/// W eroded by a disc of radius `distance`: the rectangle shrinks by the
/// distance on every side and a mask cell survives iff every cell whose
/// centre lies within the distance of its centre is valid.
inline Window erode_window(const Window& w, double distance) {
  if (!(distance >= 0.0)) throw InputError("erosion distance must be non-negative");
  const Rect& r = w.rect();
  const Rect shrunk{r.x_min + distance, r.x_max - distance, r.y_min + distance, r.y_max - distance};
  if (!(shrunk.x_min < shrunk.x_max) || !(shrunk.y_min < shrunk.y_max)) {
    throw InputError("eroded window is empty (erosion distance " + detail::format_double(distance) + ")");
  }
  if (!w.mask()) return Window(shrunk);

  const RasterField& mask = *w.mask();
  const auto& g = mask.geometry();
  const auto reach_x = static_cast<long>(std::floor(distance / g.dx));
  const auto reach_y = static_cast<long>(std::floor(distance / g.dy));
  const double d2 = distance * distance;
  RasterField eroded = RasterField::constant(g, 0.0);
  bool any = false;
  for (long iy = 0; iy < static_cast<long>(g.ny); ++iy) {
    for (long ix = 0; ix < static_cast<long>(g.nx); ++ix) {
      if (mask.at(ix, iy) == 0.0) continue;
      bool keep = true;
      for (long oy = -reach_y; oy <= reach_y && keep; ++oy) {
        for (long ox = -reach_x; ox <= reach_x && keep; ++ox) {
          const double ddx = static_cast<double>(ox) * g.dx;
          const double ddy = static_cast<double>(oy) * g.dy;
          if (ddx * ddx + ddy * ddy > d2) continue;
          const long jx = ix + ox;
          const long jy = iy + oy;
          if (jx < 0 || jy < 0 || jx >= static_cast<long>(g.nx) || jy >= static_cast<long>(g.ny) ||
              mask.at(jx, jy) == 0.0) {
            keep = false;
          }
        }
      }
      if (keep) {
        eroded.at(ix, iy) = 1.0;
        any = any || shrunk.contains(g.cell_center(ix, iy));
      }
    }
  }
  if (!any) throw InputError("eroded window mask is empty");
  return Window(shrunk, std::move(eroded));
}

/// Rasterises a simple polygon onto an nx by ny mask over its bounding box
/// (cell centres tested with the even-odd rule).
inline RasterField rasterize_polygon(const std::vector<Point>& vertices, const Rect& extent, std::size_t nx,
                                     std::size_t ny) {
  if (vertices.size() < 3) throw InputError("polygon needs at least three vertices");
  const auto g = GridGeometry::covering(extent, nx, ny);
  RasterField mask = RasterField::constant(g, 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const Point u = g.cell_center(c);
    bool inside = false;
    for (std::size_t a = 0, b = vertices.size() - 1; a < vertices.size(); b = a++) {
      const Point& va = vertices[a];
      const Point& vb = vertices[b];
      if ((va.y > u.y) != (vb.y > u.y) && u.x < (vb.x - va.x) * (u.y - va.y) / (vb.y - va.y) + va.x) {
        inside = !inside;
      }
    }
    mask.values()[c] = inside ? 1.0 : 0.0;
  }
  return mask;
}

/// A point location with a type index in 0..p-1 (files and user-facing
/// output use marks 1..p).
struct MarkedPoint {
  Point location;
  int type = 0;

  friend bool operator==(const MarkedPoint&, const MarkedPoint&) = default;
};

inline constexpr double kDuplicateDistance = 1e-12;

/// Simple multi-type point pattern observed in a window.
class MarkedPointPattern {
 public:
  MarkedPointPattern() = default;
  MarkedPointPattern(std::vector<MarkedPoint> points, Window window, int types)
      : points_(std::move(points)), window_(std::move(window)), types_(types) {
    if (types_ < 1) throw InputError("number of types must be at least 1");
    for (const auto& pt : points_) {
      if (pt.type < 0 || pt.type >= types_) {
        throw InputError("mark out of range: " + std::to_string(pt.type + 1) + " not in 1.." + std::to_string(types_));
      }
      if (!window_.contains(pt.location)) {
        throw InputError("point (" + detail::format_double(pt.location.x) + ", " +
                         detail::format_double(pt.location.y) + ") outside window");
      }
    }
    check_duplicates();
  }

  const std::vector<MarkedPoint>& points() const noexcept { return points_; }
  const Window& window() const noexcept { return window_; }
  int types() const noexcept { return types_; }
  std::size_t size() const noexcept { return points_.size(); }
  const MarkedPoint& operator[](std::size_t i) const noexcept { return points_[i]; }

  std::size_t count(int type) const {
    return static_cast<std::size_t>(
        std::count_if(points_.begin(), points_.end(), [type](const MarkedPoint& p) { return p.type == type; }));
  }

 private:
  void check_duplicates() const {
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points_[a].location.x < points_[b].location.x; });
    constexpr double tol2 = kDuplicateDistance * kDuplicateDistance;
    for (std::size_t a = 0; a < order.size(); ++a) {
      const Point& u = points_[order[a]].location;
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        const Point& v = points_[order[b]].location;
        if (v.x - u.x > kDuplicateDistance) break;
        if (squared_distance(u, v) <= tol2) {
          throw InputError("duplicate point at (" + detail::format_double(u.x) + ", " + detail::format_double(u.y) +
                           ")");
        }
      }
    }
  }

  std::vector<MarkedPoint> points_;
  Window window_;
  int types_ = 1;
};

// ---------------------------------------------------------------------------
// Files: points as CSV `x,y,mark`, windows as JSON sidecars.

inline MarkedPointPattern read_pattern(std::istream& in, int types, const Window& window,
                                       const std::string& name = "pattern") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(name + ": empty file");
  {
    const auto header = detail::split_commas(line);
    if (header.size() != 3 || header[0] != "x" || header[1] != "y" || header[2] != "mark") {
      throw InputError(name + ": header must be 'x,y,mark'");
    }
  }
  std::vector<MarkedPoint> points;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    const std::string where = name + " row " + std::to_string(row);
    if (fields.size() != 3) throw InputError(where + ": malformed row, expected 3 fields");
    const double x = detail::parse_double(fields[0], where);
    const double y = detail::parse_double(fields[1], where);
    const double mark = detail::parse_double(fields[2], where);
    if (mark != std::floor(mark)) throw InputError(where + ": mark must be an integer");
    if (mark < 1 || mark > types) {
      throw InputError(where + ": mark out of range: " + std::string(fields[2]) + " not in 1.." +
                       std::to_string(types));
    }
    points.push_back({{x, y}, static_cast<int>(mark) - 1});
  }
  return MarkedPointPattern(std::move(points), window, types);
}

inline void write_pattern(std::ostream& out, const MarkedPointPattern& pattern) {
  out << "x,y,mark\n";
  for (const auto& pt : pattern.points()) {
    out << detail::format_double(pt.location.x) << ',' << detail::format_double(pt.location.y) << ','
        << (pt.type + 1) << '\n';
  }
}

inline nlohmann::json window_to_json(const Window& w, const std::string& mask_path = {}) {
  nlohmann::json j = {{"x_min", w.rect().x_min}, {"x_max", w.rect().x_max}, {"y_min", w.rect().y_min},
                      {"y_max", w.rect().y_max}};
  if (!mask_path.empty()) j["mask"] = mask_path;
  return j;
}

/// Parses a window object; relative mask paths resolve against `base_dir`.
inline Window window_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw InputError("window must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "x_min" && key != "x_max" && key != "y_min" && key != "y_max" && key != "mask" && key != "polygon" &&
        key != "mask_resolution") {
      throw InputError("unknown window key '" + key + "'");
    }
  }
  Rect r;
  try {
    r = {j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("y_min").get<double>(),
         j.at("y_max").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("window: ") + e.what());
  }
  if (j.contains("mask") && j.contains("polygon")) throw InputError("window: give either 'mask' or 'polygon'");
  if (j.contains("mask")) {
    auto path = std::filesystem::path(j.at("mask").get<std::string>());
    if (path.is_relative()) path = base_dir / path;
    return Window(r, load_raster(path.string()));
  }
  if (j.contains("polygon")) {
    std::vector<Point> vertices;
    for (const auto& v : j.at("polygon")) vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    const auto res = j.value("mask_resolution", std::size_t{512});
    return Window(r, rasterize_polygon(vertices, r, res, res));
  }
  return Window(r);
}

inline Window load_window(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open window file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return window_from_json(j, std::filesystem::path(path).parent_path());
}

/// Sidecar path for a pattern CSV: `points.csv` -> `points.window.json`.
inline std::string window_sidecar_path(const std::string& pattern_path) {
  std::filesystem::path p(pattern_path);
  p.replace_extension(".window.json");
  return p.string();
}

inline MarkedPointPattern load_pattern(const std::string& path, int types, const Window& window) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open pattern '" + path + "'");
  return read_pattern(in, types, window, path);
}

/// Loads a pattern whose window is stored in the sidecar JSON next to it.
inline MarkedPointPattern load_pattern(const std::string& path, int types) {
  return load_pattern(path, types, load_window(window_sidecar_path(path)));
}

inline void save_pattern(const std::string& path, const MarkedPointPattern& pattern) {
  {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write pattern '" + path + "'");
    write_pattern(out, pattern);
  }
  std::string mask_path;
  if (pattern.window().mask()) {
    std::filesystem::path mp(path);
    mp.replace_extension(".mask.csv");
    save_raster(mp.string(), *pattern.window().mask());
    mask_path = mp.filename().string();
  }
  std::ofstream side(window_sidecar_path(path));
  side << window_to_json(pattern.window(), mask_path).dump(2) << '\n';
}

}  // namespace smpp
