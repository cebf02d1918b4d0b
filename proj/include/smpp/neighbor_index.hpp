#pragma once

#include "smpp/geometry.hpp"
#include "smpp/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace smpp {

/// Uniform grid of buckets for fixed-radius queries. Patterns used for
/// fitting build one index and never modify it; the birth-death sampler
/// inserts and erases points as its state changes. Ids are stable slot
/// numbers (erased slots are not reused).
class NeighborIndex {
 public:
  static constexpr std::size_t kMaxCellsPerSide = 512;

  NeighborIndex(const Rect& bounds, double cell_side) : bounds_(bounds) {
    nx_ = cells_along(bounds.width(), cell_side);
    ny_ = cells_along(bounds.height(), cell_side);
    cw_ = bounds.width() / static_cast<double>(nx_);
    ch_ = bounds.height() / static_cast<double>(ny_);
    buckets_.resize(nx_ * ny_);
  }

  NeighborIndex(const MarkedPointPattern& pattern, double cell_side)
      : NeighborIndex(pattern.window().rect(), cell_side) {
    points_.reserve(pattern.size());
    for (const auto& pt : pattern.points()) insert(pt);
  }

  std::size_t insert(const MarkedPoint& pt) {
    const std::size_t id = points_.size();
    const std::size_t cell = cell_of(pt.location);
    points_.push_back(pt);
    slot_.push_back({static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(buckets_[cell].size())});
    buckets_[cell].push_back(static_cast<std::uint32_t>(id));
    ++live_;
    return id;
  }

  void erase(std::size_t id) {
    auto& s = slot_[id];
    if (s.cell == kDead) return;
    auto& bucket = buckets_[s.cell];
    const std::uint32_t moved = bucket.back();
    bucket[s.pos] = moved;
    slot_[moved].pos = s.pos;
    bucket.pop_back();
    s.cell = kDead;
    --live_;
  }

  bool alive(std::size_t id) const noexcept { return slot_[id].cell != kDead; }
  const MarkedPoint& point(std::size_t id) const noexcept { return points_[id]; }
  std::size_t slots() const noexcept { return points_.size(); }
  std::size_t size() const noexcept { return live_; }

  /// Calls fn(id, point, squared_distance) for every live point v with
  /// |u - v| <= r, including a point located exactly at u.
  template <class Fn>
  void for_each_within(const Point& u, double r, Fn&& fn) const {
    if (r < 0.0 || live_ == 0) return;
    const double r2 = r * r;
    const std::size_t x_lo = clamp_x(u.x - r), x_hi = clamp_x(u.x + r);
    const std::size_t y_lo = clamp_y(u.y - r), y_hi = clamp_y(u.y + r);
    for (std::size_t iy = y_lo; iy <= y_hi; ++iy) {
      for (std::size_t ix = x_lo; ix <= x_hi; ++ix) {
        for (const std::uint32_t id : buckets_[iy * nx_ + ix]) {
          const double d2 = squared_distance(u, points_[id].location);
          if (d2 <= r2) fn(static_cast<std::size_t>(id), points_[id], d2);
        }
      }
    }
  }

  /// Ids of points v != u with |u - v| <= r, optionally restricted to one type.
  /// A point located exactly at u is excluded.
  std::vector<std::size_t> neighbors_within(const Point& u, double r, std::optional<int> type = std::nullopt) const {
    std::vector<std::size_t> out;
    for_each_within(u, r, [&](std::size_t id, const MarkedPoint& pt, double d2) {
      if (d2 > 0.0 && (!type || pt.type == *type)) out.push_back(id);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::uint32_t kDead = std::numeric_limits<std::uint32_t>::max();
  struct Slot {
    std::uint32_t cell;
    std::uint32_t pos;
  };

  static std::size_t cells_along(double extent, double cell_side) {
    if (!(cell_side > 0.0)) return kMaxCellsPerSide;
    const double n = std::floor(extent / cell_side);
    if (n < 1.0) return 1;
    return static_cast<std::size_t>(std::min(n, static_cast<double>(kMaxCellsPerSide)));
  }
  std::size_t clamp_x(double x) const noexcept {
    const double f = std::floor((x - bounds_.x_min) / cw_);
    if (f <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(f), nx_ - 1);
  }
  std::size_t clamp_y(double y) const noexcept {
    const double f = std::floor((y - bounds_.y_min) / ch_);
    if (f <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(f), ny_ - 1);
  }
  std::size_t cell_of(const Point& u) const noexcept { return clamp_y(u.y) * nx_ + clamp_x(u.x); }

  Rect bounds_;
  std::size_t nx_ = 1, ny_ = 1;
  double cw_ = 1.0, ch_ = 1.0;
  std::vector<MarkedPoint> points_;
  std::vector<Slot> slot_;
  std::vector<std::vector<std::uint32_t>> buckets_;
  std::size_t live_ = 0;
};

/// Convenience overload: query a pattern directly.
inline std::vector<std::size_t> neighbors_within(const NeighborIndex& idx, const Point& u, double r,
                                                 std::optional<int> type = std::nullopt) {
  return idx.neighbors_within(u, r, type);
}

}  // namespace smpp
