// Copyright 2026 The FairST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/ingest/grid.hpp"

namespace fairst {

using Ring = std::vector<PlanePoint>;

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;
};

inline Rect cell_rect(const GridSpec& g, CellIndex c) {
  const double s = g.cell_size_m;
  return {static_cast<double>(c.col) * s, static_cast<double>(c.row) * s,
          static_cast<double>(c.col + 1) * s, static_cast<double>(c.row + 1) * s};
}

// Shoelace formula; positive for counter-clockwise rings.
inline double signed_area(std::span<const PlanePoint> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    twice += ring[j].x * ring[i].y - ring[i].x * ring[j].y;
  return 0.5 * twice;
}

namespace detail {

inline double cross(PlanePoint o, PlanePoint a, PlanePoint b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(PlanePoint p, PlanePoint a, PlanePoint b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

inline int orientation(PlanePoint a, PlanePoint b, PlanePoint c, double eps) {
  const double v = cross(a, b, c);
  if (v > eps) return 1;
  if (v < -eps) return -1;
  return 0;
}

inline bool segments_touch(PlanePoint p1, PlanePoint p2, PlanePoint q1,
                           PlanePoint q2, double eps) {
  const int o1 = orientation(p1, p2, q1, eps);
  const int o2 = orientation(p1, p2, q2, eps);
  const int o3 = orientation(q1, q2, p1, eps);
  const int o4 = orientation(q1, q2, p2, eps);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0)
    return true;
  if (o1 == 0 && on_segment(q1, p1, p2)) return true;
  if (o2 == 0 && on_segment(q2, p1, p2)) return true;
  if (o3 == 0 && on_segment(p1, q1, q2)) return true;
  if (o4 == 0 && on_segment(p2, q1, q2)) return true;
  return false;
}

// Clips against one half-plane of an axis-aligned rectangle.
template <typename Inside, typename Intersect>
Ring clip_edge(const Ring& in, Inside inside, Intersect intersect) {
  Ring out;
  const std::size_t n = in.size();
  if (n == 0) return out;
  out.reserve(n + 4);
  PlanePoint prev = in[n - 1];
  bool prev_in = inside(prev);
  for (const PlanePoint& cur : in) {
    const bool cur_in = inside(cur);
    if (cur_in) {
      if (!prev_in) out.push_back(intersect(prev, cur));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(intersect(prev, cur));
    }
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

}  // namespace detail

// Drops a repeated closing vertex and consecutive duplicates.
inline Ring normalize_ring(Ring ring) {
  Ring out;
  out.reserve(ring.size());
  for (const PlanePoint& p : ring)
    if (out.empty() || out.back().x != p.x || out.back().y != p.y) out.push_back(p);
  while (out.size() > 1 && out.front().x == out.back().x &&
         out.front().y == out.back().y)
    out.pop_back();
  return out;
}

// True when no two non-adjacent edges touch.
inline bool is_simple(std::span<const PlanePoint> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  double extent = 0.0;
  for (const PlanePoint& p : ring)
    extent = std::max({extent, std::fabs(p.x), std::fabs(p.y)});
  const double eps = 1e-12 * std::max(1.0, extent * extent);
  for (std::size_t i = 0; i < n; ++i) {
    const PlanePoint a1 = ring[i];
    const PlanePoint a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (detail::segments_touch(a1, a2, ring[j], ring[(j + 1) % n], eps))
        return false;
    }
  }
  return true;
}

// Sutherland-Hodgman clip of a simple polygon to a rectangle. The result may
// contain degenerate zero-width spurs; its area is still exact.
inline Ring clip_to_rect(const Ring& ring, const Rect& r) {
  auto lerp_x = [](PlanePoint a, PlanePoint b, double x) {
    const double t = (x - a.x) / (b.x - a.x);
    return PlanePoint{x, a.y + t * (b.y - a.y)};
  };
  auto lerp_y = [](PlanePoint a, PlanePoint b, double y) {
    const double t = (y - a.y) / (b.y - a.y);
    return PlanePoint{a.x + t * (b.x - a.x), y};
  };
  Ring out = detail::clip_edge(
      ring, [&](PlanePoint p) { return p.x >= r.xmin; },
      [&](PlanePoint a, PlanePoint b) { return lerp_x(a, b, r.xmin); });
  out = detail::clip_edge(
      out, [&](PlanePoint p) { return p.x <= r.xmax; },
      [&](PlanePoint a, PlanePoint b) { return lerp_x(a, b, r.xmax); });
  out = detail::clip_edge(
      out, [&](PlanePoint p) { return p.y >= r.ymin; },
      [&](PlanePoint a, PlanePoint b) { return lerp_y(a, b, r.ymin); });
  out = detail::clip_edge(
      out, [&](PlanePoint p) { return p.y <= r.ymax; },
      [&](PlanePoint a, PlanePoint b) { return lerp_y(a, b, r.ymax); });
  return out;
}

// Polygon in grid-plane meters; holes are subtracted from the outer ring.
struct PlanePolygon {
  Ring outer;
  std::vector<Ring> holes;

  double area() const {
    double a = std::fabs(signed_area(outer));
    for (const Ring& h : holes) a -= std::fabs(signed_area(h));
    return a;
  }

  double area_in(const Rect& r) const {
    double a = std::fabs(signed_area(clip_to_rect(outer, r)));
    for (const Ring& h : holes) a -= std::fabs(signed_area(clip_to_rect(h, r)));
    return std::max(0.0, a);
  }

  Rect bounds() const {
    Rect b{outer.front().x, outer.front().y, outer.front().x, outer.front().y};
    for (const PlanePoint& p : outer) {
      b.xmin = std::min(b.xmin, p.x);
      b.xmax = std::max(b.xmax, p.x);
      b.ymin = std::min(b.ymin, p.y);
      b.ymax = std::max(b.ymax, p.y);
    }
    return b;
  }
};

inline Ring project_ring(const GridSpec& g, std::span<const LatLon> ring) {
  Ring out;
  out.reserve(ring.size());
  for (const LatLon& p : ring) out.push_back(g.project(p));
  return normalize_ring(std::move(out));
}

inline PlanePolygon make_plane_polygon(const GridSpec& g,
                                       std::span<const LatLon> outer,
                                       std::span<const std::vector<LatLon>> holes = {}) {
  PlanePolygon poly{project_ring(g, outer), {}};
  require(poly.outer.size() >= 3, ErrorKind::invalid_input,
          "polygon needs at least 3 distinct vertices, got ", poly.outer.size());
  require(is_simple(poly.outer), ErrorKind::invalid_input,
          "polygon ring is self-intersecting");
  for (const auto& h : holes) {
    Ring ring = project_ring(g, h);
    require(ring.size() >= 3 && is_simple(ring), ErrorKind::invalid_input,
            "polygon hole is degenerate or self-intersecting");
    poly.holes.push_back(std::move(ring));
  }
  require(poly.area() > 0.0, ErrorKind::invalid_input, "polygon has zero area");
  return poly;
}

inline constexpr double kSliverFraction = 1e-12;

struct CellFraction {
  std::size_t cell = 0;  // flat index
  double fraction = 0.0;
};

// Fraction of the polygon's area falling in each grid cell it overlaps. The
// fractions sum to the share of the polygon inside the grid.
inline std::vector<CellFraction> cell_fractions(const GridSpec& g,
                                                const PlanePolygon& poly) {
  std::vector<CellFraction> out;
  const Rect b = poly.bounds();
  const double s = g.cell_size_m;
  auto clamp_index = [](double v, std::size_t count) -> long {
    return std::clamp(static_cast<long>(std::floor(v)), 0L,
                      static_cast<long>(count) - 1);
  };
  if (b.xmax < 0.0 || b.ymax < 0.0 || b.xmin > s * g.cols || b.ymin > s * g.rows)
    return out;
  const long c0 = clamp_index(b.xmin / s, g.cols);
  const long c1 = clamp_index(b.xmax / s, g.cols);
  const long r0 = clamp_index(b.ymin / s, g.rows);
  const long r1 = clamp_index(b.ymax / s, g.rows);
  const double total = poly.area();
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      const CellIndex idx{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
      const double a = poly.area_in(cell_rect(g, idx));
      // Slivers this thin are projection round-off along a shared edge.
      if (a > kSliverFraction * total) out.push_back({g.flat(idx), a / total});
    }
  }
  return out;
}

// Share of a lat/lon polygon's area inside one grid cell, in [0, 1].
inline double clip_polygon_area(const GridSpec& g, std::span<const LatLon> ring,
                                CellIndex cell) {
  require(cell.row < g.rows && cell.col < g.cols, ErrorKind::invalid_input,
          "cell (", cell.row, ", ", cell.col, ") outside ", g.rows, "x", g.cols,
          " grid");
  const PlanePolygon poly = make_plane_polygon(g, ring);
  return std::clamp(poly.area_in(cell_rect(g, cell)) / poly.area(), 0.0, 1.0);
}

}  // namespace fairst
