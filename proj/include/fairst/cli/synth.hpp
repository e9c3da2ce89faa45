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

// Seeded synthetic city: segregated demographics on overlapping square
// units, Poisson trip demand with sinusoidal diurnal and weekly cycles, advantaged cells
// boosted by a bias factor, hourly weather and point / line urban features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/fairness/groups.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/features.hpp"
#include "fairst/ingest/grid.hpp"
#include "fairst/ingest/polygon.hpp"
#include "fairst/ingest/time.hpp"
#include "fairst/ingest/trips.hpp"

namespace fairst {

struct SynthConfig {
  std::size_t rows = 8;
  std::size_t cols = 8;
  double cell_size_m = 1000.0;
  double origin_lat = 47.60;
  double origin_lon = -122.35;
  UtcSeconds start = 1514764800;  // 2018-01-01T00:00:00Z, a Monday
  std::size_t hours = 504;
  double bias = 3.0;
  double mean_cell_rate = 1.0;  // mean trips per cell-hour before the bias boost
  std::string attribute = "race";
  double threshold = 0.5;
  std::size_t points = 200;
  std::size_t roads = 12;
  std::uint64_t seed = 7;

  void validate() const {
    require(rows >= 2 && cols >= 2, ErrorKind::invalid_input, "synthetic grid must be at least 2x2");
    require(cell_size_m > 0.0 && hours >= 1 && bias > 0.0 && mean_cell_rate > 0.0,
            ErrorKind::invalid_input, "invalid synthetic city parameters");
  }
};

struct WeatherRow {
  UtcSeconds timestamp = 0;
  std::vector<double> values;
};

struct SyntheticCity {
  BoundingBox bbox;
  double cell_size_m = 0.0;
  UtcSeconds start = 0;
  UtcSeconds end = 0;
  std::vector<TripRecord> trips;
  std::vector<DemographicUnit> units;
  std::vector<std::string> weather_names;
  std::vector<WeatherRow> weather;
  UrbanGeometries points;  // rasterized by count
  UrbanGeometries roads;   // rasterized by total length
  std::vector<double> expected_rate;  // (hours, rows, cols) Poisson means
};

namespace detail {

inline double diurnal_factor(UtcSeconds t) {
  const double h = static_cast<double>(hour_of_day(t));
  // Peak mid-afternoon, trough before dawn.
  return 1.0 + 0.7 * std::sin(2.0 * std::numbers::pi * (h - 9.0) / 24.0);
}

inline double weekly_factor(UtcSeconds t) {
  const double d = static_cast<double>(day_of_week(t)) + hour_of_day(t) / 24.0;
  return 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * (d - 1.0) / 7.0);
}

}  // namespace detail

inline SyntheticCity generate_city(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticCity city;
  city.cell_size_m = cfg.cell_size_m;
  city.start = cfg.start;
  city.end = cfg.start + static_cast<UtcSeconds>(cfg.hours) * kSecondsPerHour;
  const double mdeg_lat = kEarthRadiusM * std::numbers::pi / 180.0;
  // Fix the bbox from the same equirectangular factors build_grid will use.
  const double height = static_cast<double>(cfg.rows) * cfg.cell_size_m;
  const double max_lat = cfg.origin_lat + height / mdeg_lat;
  const double center = 0.5 * (cfg.origin_lat + max_lat);
  const double mdeg_lon = mdeg_lat * std::cos(center * std::numbers::pi / 180.0);
  const double width = static_cast<double>(cfg.cols) * cfg.cell_size_m;
  city.bbox = {cfg.origin_lat, cfg.origin_lon, max_lat, cfg.origin_lon + width / mdeg_lon};
  const GridSpec grid = build_grid(city.bbox, cfg.cell_size_m);
  auto to_latlon = [&](double x, double y) { return grid.unproject({x, y}); };

  // Demographic units: squares of two cells, offset by half a cell so every
  // grid cell mixes up to four units. The north-east is mostly advantaged.
  const double s = cfg.cell_size_m;
  const std::size_t unit_rows = cfg.rows / 2 + 1;
  const std::size_t unit_cols = cfg.cols / 2 + 1;
  for (std::size_t ur = 0; ur < unit_rows; ++ur) {
    for (std::size_t uc = 0; uc < unit_cols; ++uc) {
      const double x0 = std::max(0.0, (2.0 * static_cast<double>(uc) - 0.5) * s);
      const double y0 = std::max(0.0, (2.0 * static_cast<double>(ur) - 0.5) * s);
      const double x1 = std::min(width, (2.0 * static_cast<double>(uc) + 1.5) * s);
      const double y1 = std::min(height, (2.0 * static_cast<double>(ur) + 1.5) * s);
      if (x1 <= x0 || y1 <= y0) continue;
      DemographicUnit u;
      u.parts.push_back({{to_latlon(x0, y0), to_latlon(x1, y0), to_latlon(x1, y1),
                          to_latlon(x0, y1)},
                         {}});
      const double area_km2 = (x1 - x0) * (y1 - y0) / 1e6;
      u.population = std::round(area_km2 * (1500.0 + 2500.0 * unit(rng)));
      const double cx = 0.5 * (x0 + x1) / width;
      const double cy = 0.5 * (y0 + y1) / height;
      const bool advantaged = cx + cy + 0.3 * (unit(rng) - 0.5) > 1.0;
      u.advantaged_fraction[cfg.attribute] =
          advantaged ? 0.75 + 0.2 * unit(rng) : 0.1 + 0.25 * unit(rng);
      city.units.push_back(std::move(u));
    }
  }
  const DemographicField field = allocate_demographics(city.units, grid);
  const GroupLabeling labels = discretize_groups(field, cfg.attribute, cfg.threshold);

  // Per-cell base intensity: population share, boosted for advantaged cells,
  // scaled so an unboosted cell averages `mean_cell_rate` trips per hour.
  const std::size_t P = grid.cell_count();
  std::vector<double> intensity(P);
  for (std::size_t i = 0; i < P; ++i) {
    const double boost = labels.labels[i] == GroupLabel::advantaged ? cfg.bias : 1.0;
    intensity[i] = field.population_share[i] * static_cast<double>(P) *
                   cfg.mean_cell_rate * boost;
  }

  city.expected_rate.assign(cfg.hours * P, 0.0);
  for (std::size_t t = 0; t < cfg.hours; ++t) {
    const UtcSeconds when = cfg.start + static_cast<UtcSeconds>(t) * kSecondsPerHour;
    const double temporal = detail::diurnal_factor(when) * detail::weekly_factor(when);
    for (std::size_t i = 0; i < P; ++i) {
      const double rate = intensity[i] * temporal;
      city.expected_rate[t * P + i] = rate;
      std::poisson_distribution<int> draw(rate);
      const int n = rate > 0.0 ? draw(rng) : 0;
      const std::size_t r = i / cfg.cols, c = i % cfg.cols;
      for (int k = 0; k < n; ++k) {
        // Keep samples strictly inside the cell so rounding never moves them.
        const double x = (static_cast<double>(c) + 0.02 + 0.96 * unit(rng)) * s;
        const double y = (static_cast<double>(r) + 0.02 + 0.96 * unit(rng)) * s;
        const LatLon ll = to_latlon(x, y);
        const auto offset = static_cast<UtcSeconds>(unit(rng) * 3599.0);
        city.trips.push_back({when + offset, ll.lat, ll.lon});
      }
    }
  }

  city.weather_names = {"temperature", "pressure"};
  std::normal_distribution<double> noise(0.0, 1.0);
  double pressure = 1013.0;
  for (std::size_t t = 0; t < cfg.hours; ++t) {
    const UtcSeconds when = cfg.start + static_cast<UtcSeconds>(t) * kSecondsPerHour;
    const double h = static_cast<double>(hour_of_day(when));
    const double temp =
        8.0 + 6.0 * std::sin(2.0 * std::numbers::pi * (h - 9.0) / 24.0) + 0.8 * noise(rng);
    pressure += 0.3 * noise(rng) + 0.01 * (1013.0 - pressure);
    city.weather.push_back({when, {temp, pressure}});
  }

  // Points of interest follow population; roads are random straight lines.
  std::discrete_distribution<std::size_t> pick_cell(field.population_share.begin(),
                                                    field.population_share.end());
  for (std::size_t k = 0; k < cfg.points; ++k) {
    const std::size_t i = pick_cell(rng);
    const double x = (static_cast<double>(i % cfg.cols) + 0.02 + 0.96 * unit(rng)) * s;
    const double y = (static_cast<double>(i / cfg.cols) + 0.02 + 0.96 * unit(rng)) * s;
    city.points.points.push_back(to_latlon(x, y));
  }
  for (std::size_t k = 0; k < cfg.roads; ++k) {
    const double x0 = unit(rng) * width, y0 = unit(rng) * height;
    const double x1 = unit(rng) * width, y1 = unit(rng) * height;
    city.roads.polylines.push_back({to_latlon(x0, y0), to_latlon(x1, y1)});
  }
  return city;
}

}  // namespace fairst
