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
#include <numbers>
#include <optional>

#include "fairst/error.hpp"

namespace fairst {

inline constexpr double kEarthRadiusM = 6371008.8;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

// Planar coordinates in meters east (x) and north (y) of the grid origin.
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
};

struct BoundingBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;
};

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Square cells anchored at the south-west corner of the bounding box. Row
// index grows northward, column index eastward.
struct GridSpec {
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double cell_size_m = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double meters_per_deg_lat = 0.0;
  double meters_per_deg_lon = 0.0;
  // Extent of the bounding box itself; padding cells may reach beyond it.
  double width_m = 0.0;
  double height_m = 0.0;

  std::size_t cell_count() const { return rows * cols; }
  std::size_t flat(CellIndex c) const { return c.row * cols + c.col; }

  PlanePoint project(LatLon p) const {
    return {(p.lon - origin_lon) * meters_per_deg_lon,
            (p.lat - origin_lat) * meters_per_deg_lat};
  }

  LatLon unproject(PlanePoint p) const {
    return {origin_lat + p.y / meters_per_deg_lat,
            origin_lon + p.x / meters_per_deg_lon};
  }

  BoundingBox bbox() const {
    return {origin_lat, origin_lon, origin_lat + height_m / meters_per_deg_lat,
            origin_lon + width_m / meters_per_deg_lon};
  }
};

// Snapping tolerance in cell units; absorbs degree/meter round-off so points
// constructed on a cell edge land on the intended side.
inline constexpr double kEdgeTolerance = 1e-9;

inline GridSpec build_grid(const BoundingBox& bbox, double cell_size_m) {
  require(std::isfinite(cell_size_m) && cell_size_m > 0.0,
          ErrorKind::invalid_input, "cell size must be positive, got ",
          cell_size_m);
  require(std::isfinite(bbox.min_lat) && std::isfinite(bbox.max_lat) &&
              std::isfinite(bbox.min_lon) && std::isfinite(bbox.max_lon),
          ErrorKind::invalid_input, "bounding box has non-finite corners");
  require(bbox.max_lat > bbox.min_lat && bbox.max_lon > bbox.min_lon,
          ErrorKind::invalid_input, "degenerate bounding box [", bbox.min_lat,
          ", ", bbox.min_lon, "] - [", bbox.max_lat, ", ", bbox.max_lon, "]");
  require(bbox.min_lat >= -90.0 && bbox.max_lat <= 90.0 &&
              bbox.min_lon >= -180.0 && bbox.max_lon <= 180.0,
          ErrorKind::invalid_input, "bounding box outside lat/lon range");
  GridSpec g;
  g.origin_lat = bbox.min_lat;
  g.origin_lon = bbox.min_lon;
  g.cell_size_m = cell_size_m;
  const double center_lat = 0.5 * (bbox.min_lat + bbox.max_lat);
  g.meters_per_deg_lat = kEarthRadiusM * std::numbers::pi / 180.0;
  g.meters_per_deg_lon =
      g.meters_per_deg_lat * std::cos(center_lat * std::numbers::pi / 180.0);
  g.height_m = (bbox.max_lat - bbox.min_lat) * g.meters_per_deg_lat;
  g.width_m = (bbox.max_lon - bbox.min_lon) * g.meters_per_deg_lon;
  auto cells = [&](double extent) {
    return static_cast<std::size_t>(
        std::max(1.0, std::ceil(extent / cell_size_m - kEdgeTolerance)));
  };
  g.rows = cells(g.height_m);
  g.cols = cells(g.width_m);
  return g;
}

// Half-open membership: an edge shared by two cells belongs to the cell with
// the larger index. The far bbox edge belongs to the last cell.
inline std::optional<CellIndex> locate_plane(const GridSpec& g, PlanePoint p) {
  const double tol = kEdgeTolerance * g.cell_size_m;
  if (!(p.x >= -tol && p.y >= -tol && p.x <= g.width_m + tol &&
        p.y <= g.height_m + tol))
    return std::nullopt;
  auto index = [&](double v, std::size_t count) {
    const double scaled = std::floor(v / g.cell_size_m + kEdgeTolerance);
    if (scaled <= 0.0) return std::size_t{0};
    return std::min(static_cast<std::size_t>(scaled), count - 1);
  };
  return CellIndex{index(p.y, g.rows), index(p.x, g.cols)};
}

inline std::optional<CellIndex> locate(const GridSpec& g, double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) return std::nullopt;
  return locate_plane(g, g.project({lat, lon}));
}

}  // namespace fairst
