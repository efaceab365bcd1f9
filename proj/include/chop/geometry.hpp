#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

namespace chop {

// Nearest double to `value` printed with `digits` significant digits.
inline double round_significant(double value, int digits = 9) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return std::strtod(buffer, nullptr);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double squared_norm(Vec2 v) { return v.x * v.x + v.y * v.y; }
inline double norm(Vec2 v) { return std::sqrt(squared_norm(v)); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// Axis-aligned box in original image pixels.
struct Box {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  static Box point(Vec2 p) { return {p.x, p.y, p.x, p.y}; }
  bool empty() const { return min_x > max_x; }
  double width() const { return empty() ? 0.0 : max_x - min_x; }
  double height() const { return empty() ? 0.0 : max_y - min_y; }
  void expand(const Box& other) {
    min_x = std::min(min_x, other.min_x);
    min_y = std::min(min_y, other.min_y);
    max_x = std::max(max_x, other.max_x);
    max_y = std::max(max_y, other.max_y);
  }
};

// Uniform bucket grid for fixed-radius neighbour queries. Cell size equals
// the query radius, so a query inspects the 3x3 block around the point.
class RadiusIndex {
 public:
  RadiusIndex(std::span<const Vec2> points, double radius)
      : points_(points.begin(), points.end()), radius_(radius > 0.0 ? radius : 1.0) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      cells_[key(cell_of(points_[i].x), cell_of(points_[i].y))].push_back(i);
    }
  }

  // Calls fn(index) for every stored point with distance(p, point) <= radius.
  // Indices arrive in ascending order within a cell, not globally.
  template <typename Fn>
  void for_each_within(Vec2 p, double radius, Fn&& fn) const {
    const double r2 = radius * radius;
    const std::int64_t span = static_cast<std::int64_t>(std::ceil(radius / radius_));
    const std::int64_t cx = cell_of(p.x);
    const std::int64_t cy = cell_of(p.y);
    for (std::int64_t dy = -span; dy <= span; ++dy) {
      for (std::int64_t dx = -span; dx <= span; ++dx) {
        auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t i : it->second) {
          if (squared_norm(points_[i] - p) <= r2) fn(i);
        }
      }
    }
  }

 private:
  std::int64_t cell_of(double v) const {
    return static_cast<std::int64_t>(std::floor(v / radius_));
  }
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
  }

  std::vector<Vec2> points_;
  double radius_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace chop
