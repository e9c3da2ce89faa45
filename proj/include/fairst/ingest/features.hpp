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
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fairst/error.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/grid.hpp"
#include "fairst/tensor/archive.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

enum class RasterMode { count, total_length };

inline RasterMode parse_raster_mode(std::string_view text) {
  if (text == "count") return RasterMode::count;
  if (text == "total_length" || text == "length") return RasterMode::total_length;
  fail(ErrorKind::invalid_input, "unknown rasterization mode '", text,
       "' (expected count or total_length)");
}

struct UrbanGeometries {
  std::vector<LatLon> points;
  std::vector<std::vector<LatLon>> polylines;
};

struct FeatureStack2D {
  std::vector<std::string> names;
  Tensor maps;  // (N, rows, cols)
};

namespace detail {

struct SegmentPiece {
  std::size_t cell;
  double length;
};

// Splits segment a-b at every grid line it crosses and assigns each piece to
// the cell containing its midpoint. Pieces outside the bbox are dropped.
inline std::vector<SegmentPiece> split_segment(const GridSpec& g, PlanePoint a,
                                               PlanePoint b) {
  std::vector<double> cuts{0.0, 1.0};
  const double s = g.cell_size_m;
  auto add_cuts = [&](double from, double to) {
    if (from == to) return;
    const double lo = std::min(from, to);
    const double hi = std::max(from, to);
    for (double k = std::ceil(lo / s); k * s < hi; k += 1.0) {
      const double t = (k * s - from) / (to - from);
      if (t > 0.0 && t < 1.0) cuts.push_back(t);
    }
  };
  add_cuts(a.x, b.x);
  add_cuts(a.y, b.y);
  std::sort(cuts.begin(), cuts.end());
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double length = std::hypot(dx, dy);
  std::vector<SegmentPiece> pieces;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double t0 = cuts[i];
    const double t1 = cuts[i + 1];
    if (t1 <= t0) continue;
    const double tm = 0.5 * (t0 + t1);
    const auto cell = locate_plane(g, {a.x + tm * dx, a.y + tm * dy});
    if (cell) pieces.push_back({g.flat(*cell), (t1 - t0) * length});
  }
  return pieces;
}

}  // namespace detail

// One raster layer (rows, cols). Count mode counts points and, for polylines,
// each segment once per cell it passes through. Length mode sums clipped
// polyline length in meters; points contribute nothing.
inline Tensor rasterize_features(const UrbanGeometries& geoms, const GridSpec& grid,
                                 RasterMode mode) {
  Tensor layer(Shape{grid.rows, grid.cols});
  if (mode == RasterMode::count) {
    for (const LatLon& p : geoms.points)
      if (auto cell = locate(grid, p.lat, p.lon)) layer[grid.flat(*cell)] += 1.0;
  }
  for (const auto& line : geoms.polylines) {
    if (line.size() == 1 && mode == RasterMode::count) {
      if (auto cell = locate(grid, line[0].lat, line[0].lon))
        layer[grid.flat(*cell)] += 1.0;
      continue;
    }
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const PlanePoint a = grid.project(line[i]);
      const PlanePoint b = grid.project(line[i + 1]);
      if (mode == RasterMode::total_length) {
        for (const auto& piece : detail::split_segment(grid, a, b))
          layer[piece.cell] += piece.length;
        continue;
      }
      std::set<std::size_t> touched;
      if (a.x == b.x && a.y == b.y) {
        if (auto cell = locate_plane(grid, a)) touched.insert(grid.flat(*cell));
      } else {
        for (const auto& piece : detail::split_segment(grid, a, b))
          touched.insert(piece.cell);
      }
      for (std::size_t cell : touched) layer[cell] += 1.0;
    }
  }
  return layer;
}

inline UrbanGeometries parse_features_geojson(const std::string& text,
                                              const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::data, source, ": invalid JSON: ", e.what());
  }
  require(doc.is_object() && doc.contains("features") && doc["features"].is_array(),
          ErrorKind::data, source, ": expected a GeoJSON FeatureCollection");
  UrbanGeometries out;
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const std::string where = source + ": feature " + std::to_string(index++);
    require(feature.is_object() && feature.contains("geometry") &&
                feature["geometry"].is_object() &&
                feature["geometry"].contains("coordinates"),
            ErrorKind::data, where, ": missing geometry");
    const auto& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    const auto& coords = geom["coordinates"];
    if (type == "Point") {
      out.points.push_back(detail::parse_ring(nlohmann::json::array({coords}), where)[0]);
    } else if (type == "MultiPoint") {
      for (const LatLon& p : detail::parse_ring(coords, where)) out.points.push_back(p);
    } else if (type == "LineString") {
      out.polylines.push_back(detail::parse_ring(coords, where));
    } else if (type == "MultiLineString") {
      for (const auto& line : coords) out.polylines.push_back(detail::parse_ring(line, where));
    } else {
      fail(ErrorKind::data, where, ": unsupported feature geometry '", type, "'");
    }
  }
  return out;
}

inline UrbanGeometries read_features_geojson(const std::filesystem::path& path) {
  return parse_features_geojson(read_file(path), path.string());
}

inline std::string features_to_geojson(const UrbanGeometries& geoms) {
  nlohmann::json features = nlohmann::json::array();
  for (const LatLon& p : geoms.points)
    features.push_back({{"type", "Feature"},
                        {"properties", nlohmann::json::object()},
                        {"geometry", {{"type", "Point"}, {"coordinates", {p.lon, p.lat}}}}});
  for (const auto& line : geoms.polylines) {
    nlohmann::json coords = nlohmann::json::array();
    for (const LatLon& p : line) coords.push_back({p.lon, p.lat});
    features.push_back({{"type", "Feature"},
                        {"properties", nlohmann::json::object()},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}});
  }
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

}  // namespace fairst
