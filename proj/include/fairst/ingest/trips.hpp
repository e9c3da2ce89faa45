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

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/ingest/grid.hpp"
#include "fairst/ingest/time.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

struct TripRecord {
  UtcSeconds timestamp = 0;
  double lat = 0.0;
  double lon = 0.0;
};

// Demand counts (or predictions) laid out (T, rows, cols).
struct DemandTensor {
  Tensor values;
  UtcSeconds start_time = 0;
  UtcSeconds interval_s = kSecondsPerHour;

  std::size_t steps() const { return values.dim(0); }
  std::size_t rows() const { return values.dim(1); }
  std::size_t cols() const { return values.dim(2); }
  std::size_t cells() const { return rows() * cols(); }
  UtcSeconds time_at(std::size_t t) const {
    return start_time + static_cast<UtcSeconds>(t) * interval_s;
  }

  std::span<const double> frame(std::size_t t) const {
    return values.values().subspan(t * cells(), cells());
  }
  std::span<double> frame(std::size_t t) {
    return values.values().subspan(t * cells(), cells());
  }
};

struct TripAggregation {
  DemandTensor demand;
  std::size_t dropped_outside_bbox = 0;
  std::size_t dropped_outside_period = 0;

  std::size_t dropped() const { return dropped_outside_bbox + dropped_outside_period; }
};

// Hourly pickup counts per cell over [start, end).
inline TripAggregation aggregate_trips(std::span<const TripRecord> trips,
                                       const GridSpec& grid, UtcSeconds start,
                                       UtcSeconds end) {
  require(start < end, ErrorKind::invalid_input, "aggregation period is empty");
  require(hour_aligned(start) && hour_aligned(end), ErrorKind::invalid_input,
          "aggregation period must be aligned to the hour");
  const auto steps = static_cast<std::size_t>((end - start) / kSecondsPerHour);
  TripAggregation out;
  out.demand.values = Tensor(Shape{steps, grid.rows, grid.cols});
  out.demand.start_time = start;
  out.demand.interval_s = kSecondsPerHour;
  for (const TripRecord& trip : trips) {
    if (trip.timestamp < start || trip.timestamp >= end) {
      ++out.dropped_outside_period;
      continue;
    }
    const auto cell = locate(grid, trip.lat, trip.lon);
    if (!cell) {
      ++out.dropped_outside_bbox;
      continue;
    }
    const auto t = static_cast<std::size_t>((trip.timestamp - start) / kSecondsPerHour);
    out.demand.values[t * grid.cell_count() + grid.flat(*cell)] += 1.0;
  }
  return out;
}

// Trip CSV with header `timestamp,lat,lon` (column order free).
inline std::vector<TripRecord> parse_trips_csv(const csv::Table& table,
                                               const std::string& source) {
  const auto ts = table.column("timestamp");
  const auto lat = table.column("lat");
  const auto lon = table.column("lon");
  require(ts && lat && lon, ErrorKind::data, source,
          ": trip CSV header must contain timestamp,lat,lon");
  std::vector<TripRecord> trips;
  trips.reserve(table.rows.size());
  for (const csv::Row& row : table.rows) {
    const auto t = parse_rfc3339(row.fields[*ts]);
    const auto la = csv::to_double(row.fields[*lat]);
    const auto lo = csv::to_double(row.fields[*lon]);
    require(t.has_value(), ErrorKind::data, source, ":", row.line,
            ": malformed RFC 3339 timestamp '", row.fields[*ts], "'");
    require(la && lo && *la >= -90.0 && *la <= 90.0 && *lo >= -180.0 &&
                *lo <= 180.0,
            ErrorKind::data, source, ":", row.line, ": malformed coordinates");
    trips.push_back({*t, *la, *lo});
  }
  return trips;
}

inline std::vector<TripRecord> read_trips_csv(const std::filesystem::path& path) {
  return parse_trips_csv(csv::read(path), path.string());
}

}  // namespace fairst
