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

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/features.hpp"
#include "fairst/ingest/polygon.hpp"
#include "oracles.hpp"

namespace fairst {
namespace {

GridSpec grid_of(std::size_t rows, std::size_t cols) {
  const double mlat = kEarthRadiusM * std::numbers::pi / 180.0;
  const double lat0 = 40.0, lon0 = -74.0;
  const double max_lat = lat0 + 1000.0 * rows / mlat;
  const double mlon = mlat * std::cos(0.5 * (lat0 + max_lat) * std::numbers::pi / 180.0);
  return build_grid({lat0, lon0, max_lat, lon0 + 1000.0 * cols / mlon}, 1000.0);
}

std::vector<LatLon> ring(const GridSpec& g, const std::vector<oracle::Pt>& pts) {
  std::vector<LatLon> out;
  for (const auto& p : pts) out.push_back(g.unproject({p.x, p.y}));
  return out;
}

std::vector<LatLon> rect(const GridSpec& g, double x0, double y0, double x1, double y1) {
  return ring(g, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

TEST(Clip, CellCoveredPolygon) {
  const GridSpec g = grid_of(2, 2);
  const auto r = rect(g, 0, 0, 1000, 1000);
  EXPECT_NEAR(clip_polygon_area(g, r, {0, 0}), 1.0, 1e-9);
  EXPECT_NEAR(clip_polygon_area(g, r, {0, 1}), 0.0, 1e-9);
}

TEST(Clip, SymmetricSplit) {
  const GridSpec g = grid_of(2, 2);
  const auto r = rect(g, 500, 200, 1500, 800);
  EXPECT_NEAR(clip_polygon_area(g, r, {0, 0}), 0.5, 1e-9);
  EXPECT_NEAR(clip_polygon_area(g, r, {0, 1}), 0.5, 1e-9);
}

TEST(Clip, TriangleMatchesMonteCarlo) {
  const GridSpec g = grid_of(3, 3);
  const std::vector<oracle::Pt> tri{{100, 200}, {2700, 500}, {900, 2600}};
  const PlanePolygon poly = make_plane_polygon(g, ring(g, tri));
  std::vector<double> got(9, 0.0);
  double sum = 0.0;
  for (const CellFraction& cf : cell_fractions(g, poly)) {
    got[cf.cell] = cf.fraction;
    sum += cf.fraction;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  const auto want = oracle::monte_carlo_fractions(tri, 1000.0, 3, 3, 4'000'000, 17);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(got[i], want[i], 1e-3) << "cell " << i;
}

TEST(Clip, HolesAndPartialCoverage) {
  const GridSpec g = grid_of(2, 2);
  // 2000 x 2000 square with a 1000 x 1000 hole centered on the grid.
  const PlanePolygon poly = make_plane_polygon(
      g, rect(g, 0, 0, 2000, 2000), std::vector<std::vector<LatLon>>{rect(g, 500, 500, 1500, 1500)});
  EXPECT_NEAR(poly.area(), 3e6, 1e-3);
  double sum = 0.0;
  for (const CellFraction& cf : cell_fractions(g, poly)) {
    EXPECT_NEAR(cf.fraction, 0.25, 1e-9);
    sum += cf.fraction;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  // Half of this rectangle hangs outside the grid.
  const PlanePolygon out = make_plane_polygon(g, rect(g, 1500, 0, 2500, 1000));
  sum = 0.0;
  for (const CellFraction& cf : cell_fractions(g, out)) sum += cf.fraction;
  EXPECT_NEAR(sum, 0.5, 1e-9);
}

TEST(Clip, RejectsBadRings) {
  const GridSpec g = grid_of(2, 2);
  const auto bowtie = ring(g, {{0, 0}, {1000, 1000}, {1000, 0}, {0, 1000}});
  EXPECT_THROW(clip_polygon_area(g, bowtie, {0, 0}), Error);
  EXPECT_THROW(clip_polygon_area(g, ring(g, {{0, 0}, {10, 10}}), {0, 0}), Error);
  EXPECT_THROW(clip_polygon_area(g, rect(g, 0, 0, 10, 10), {5, 0}), Error);
}

TEST(Demographics, AllocatesByArea) {
  const GridSpec g = grid_of(2, 2);
  DemographicUnit a{{LatLonPolygon{rect(g, 0, 0, 2000, 1000), {}}}, 100.0, {{"race", 0.8}}};
  DemographicUnit b{{LatLonPolygon{rect(g, 1000, 0, 2000, 2000), {}}}, 60.0, {{"race", 0.2}}};
  const std::vector<DemographicUnit> units{a, b};
  const DemographicField f = allocate_demographics(units, g);
  // Cells are row-major from the south-west corner.
  const std::vector<double> pop{50, 80, 0, 30};
  const std::vector<double> w{0.8, (40.0 + 6.0) / 80.0, 0.0, 0.2};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(f.cell_population[i], pop[i], 1e-6);
    EXPECT_NEAR(f.population_share[i], pop[i] / 160.0, 1e-9);
    EXPECT_NEAR(f.attribute("race")[i], w[i], 1e-9);
  }
  EXPECT_THROW(f.attribute("income"), Error);
}

TEST(Demographics, ConservesPopulationInsideTheGrid) {
  const GridSpec g = grid_of(4, 4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(100, 3000), size(200, 900), frac(0, 1);
  std::vector<DemographicUnit> units;
  double total = 0.0;
  for (int i = 0; i < 30; ++i) {
    const double x = pos(rng), y = pos(rng), w = size(rng), h = size(rng);
    const double people = 1000 * frac(rng);
    units.push_back({{LatLonPolygon{rect(g, x, y, x + w, y + h), {}}}, people, {{"race", frac(rng)}}});
    total += people;
  }
  const DemographicField f = allocate_demographics(units, g);
  double allocated = 0.0, share = 0.0;
  for (std::size_t i = 0; i < f.cells(); ++i) {
    allocated += f.cell_population[i];
    share += f.population_share[i];
  }
  EXPECT_NEAR(allocated, total, 1e-6 * total);
  EXPECT_NEAR(share, 1.0, 1e-12);
}

TEST(Demographics, ParsesGeoJson) {
  const std::string text = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"population":10,"race_adv_frac":0.25},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]})";
  const auto units = parse_demographics_geojson(text, "d.geojson");
  ASSERT_EQ(units.size(), 1u);
  EXPECT_EQ(units[0].population, 10.0);
  EXPECT_EQ(units[0].advantaged_fraction.at("race"), 0.25);
  EXPECT_EQ(units[0].parts[0].outer[1].lon, 1.0);
  EXPECT_THROW(parse_demographics_geojson("{", "x"), Error);
  EXPECT_THROW(parse_demographics_geojson(R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[]}}]})",
                                          "x"),
               Error);
}

// Length per cell by walking the segment in 1 cm steps.
std::vector<double> walked_lengths(const GridSpec& g, PlanePoint a, PlanePoint b) {
  std::vector<double> out(g.cell_count(), 0.0);
  const double length = std::hypot(b.x - a.x, b.y - a.y);
  const auto steps = static_cast<std::size_t>(std::llround(length / 0.01));
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / static_cast<double>(steps);
    const auto cell = locate_plane(g, {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    if (cell) out[g.flat(*cell)] += length / static_cast<double>(steps);
  }
  return out;
}

TEST(Rasterize, SplitsSegmentsAtCellEdges) {
  const GridSpec g = grid_of(2, 2);
  UrbanGeometries geoms;
  geoms.polylines.push_back(ring(g, {{800, 500}, {1100, 500}}));
  const Tensor lengths = rasterize_features(geoms, g, RasterMode::total_length);
  EXPECT_NEAR(lengths[0], 200.0, 1e-6);
  EXPECT_NEAR(lengths[1], 100.0, 1e-6);
  const Tensor counts = rasterize_features(geoms, g, RasterMode::count);
  EXPECT_EQ(counts.storage(), (std::vector<double>{1, 1, 0, 0}));

  UrbanGeometries diagonal;
  diagonal.polylines.push_back(ring(g, {{150, 1900}, {1700, 300}, {1950, 1200}}));
  const Tensor got = rasterize_features(diagonal, g, RasterMode::total_length);
  std::vector<double> want(4, 0.0);
  const auto pts = diagonal.polylines[0];
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto w = walked_lengths(g, g.project(pts[i]), g.project(pts[i + 1]));
    for (std::size_t c = 0; c < 4; ++c) want[c] += w[c];
  }
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(got[c], want[c], 0.02) << "cell " << c;
}

TEST(Rasterize, CountsPointsAndHandlesEmptyInput) {
  const GridSpec g = grid_of(2, 2);
  UrbanGeometries geoms;
  geoms.points = ring(g, {{10, 10}, {1500, 1500}, {1600, 1400}, {5000, 5000}});
  EXPECT_EQ(rasterize_features(geoms, g, RasterMode::count).storage(),
            (std::vector<double>{1, 0, 0, 2}));
  EXPECT_EQ(rasterize_features(geoms, g, RasterMode::total_length), Tensor(Shape{2, 2}));
  EXPECT_EQ(rasterize_features(UrbanGeometries{}, g, RasterMode::count), Tensor(Shape{2, 2}));
  EXPECT_THROW(parse_raster_mode("area"), Error);
  EXPECT_EQ(parse_raster_mode("total_length"), RasterMode::total_length);
}

}  // namespace
}  // namespace fairst
