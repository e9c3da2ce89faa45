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
#include <filesystem>
#include <iterator>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/ingest/time.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

// City-level hourly series, standardized row by row.
struct SeriesStack1D {
  std::vector<std::string> names;
  Tensor series;  // (M, T)
  UtcSeconds start_time = 0;
  std::vector<double> mean;    // training-period statistics used
  std::vector<double> stddev;  // population std; 1 when the series is flat

  std::size_t count() const { return names.size(); }
  std::size_t steps() const { return series.rank() == 2 ? series.dim(1) : 0; }
};

// Standardizes each row with statistics over its first `fit_steps` columns.
inline void standardize(SeriesStack1D& stack, std::size_t fit_steps) {
  const std::size_t M = stack.count();
  const std::size_t T = stack.steps();
  require(fit_steps >= 1 && fit_steps <= T, ErrorKind::invalid_input,
          "standardization window of ", fit_steps, " steps outside [1, ", T, "]");
  stack.mean.assign(M, 0.0);
  stack.stddev.assign(M, 1.0);
  for (std::size_t m = 0; m < M; ++m) {
    double* row = stack.series.data() + m * T;
    double mean = 0.0;
    for (std::size_t t = 0; t < fit_steps; ++t) mean += row[t];
    mean /= static_cast<double>(fit_steps);
    double var = 0.0;
    for (std::size_t t = 0; t < fit_steps; ++t) var += (row[t] - mean) * (row[t] - mean);
    var /= static_cast<double>(fit_steps);
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (std::size_t t = 0; t < T; ++t) row[t] = (row[t] - mean) / sd;
    stack.mean[m] = mean;
    stack.stddev[m] = sd;
  }
}

// Hourly matrix over [start, end) for the requested columns. Missing hours
// are forward-filled; hours before the first observation take its value.
// Statistics come from hours before `train_end` (default: the whole period).
inline SeriesStack1D load_series(const csv::Table& table, const std::string& source,
                                 std::span<const std::string> names, UtcSeconds start,
                                 UtcSeconds end,
                                 std::optional<UtcSeconds> train_end = std::nullopt) {
  require(start < end && hour_aligned(start) && hour_aligned(end),
          ErrorKind::invalid_input, "series period must be non-empty and hour aligned");
  const auto ts = table.column("timestamp");
  require(ts.has_value(), ErrorKind::data, source,
          ": series CSV header must start with timestamp");
  std::vector<std::size_t> columns;
  for (const std::string& name : names) {
    const auto col = table.column(name);
    require(col.has_value(), ErrorKind::invalid_input, source, ": series '",
            name, "' not present in header");
    columns.push_back(*col);
  }
  const auto T = static_cast<std::size_t>((end - start) / kSecondsPerHour);
  const std::size_t M = names.size();

  // Observations by hour, per requested column.
  std::vector<std::map<UtcSeconds, double>> obs(M);
  std::map<UtcSeconds, std::size_t> seen;
  for (const csv::Row& row : table.rows) {
    const auto t = parse_rfc3339(row.fields[*ts]);
    require(t.has_value(), ErrorKind::data, source, ":", row.line,
            ": malformed RFC 3339 timestamp '", row.fields[*ts], "'");
    require(hour_aligned(*t), ErrorKind::data, source, ":", row.line,
            ": timestamp not on the hour");
    auto [it, inserted] = seen.emplace(*t, row.line);
    require(inserted, ErrorKind::data, source, ":", row.line,
            ": duplicate timestamp (first seen on line ", it->second, ")");
    for (std::size_t m = 0; m < M; ++m) {
      const std::string& field = row.fields[columns[m]];
      if (field.empty()) continue;
      const auto v = csv::to_double(field);
      require(v.has_value(), ErrorKind::data, source, ":", row.line,
              ": malformed value '", field, "' for ", names[m]);
      obs[m][*t] = *v;
    }
  }

  SeriesStack1D stack;
  stack.names.assign(names.begin(), names.end());
  stack.start_time = start;
  stack.series = Tensor(Shape{M, T});
  for (std::size_t m = 0; m < M; ++m) {
    require(!obs[m].empty(), ErrorKind::data, source, ": series '", names[m],
            "' has no observations");
    // Carry-in from the latest observation at or before `start`, else the
    // first observation overall.
    auto carry = obs[m].upper_bound(start);
    double current = carry == obs[m].begin() ? obs[m].begin()->second
                                             : std::prev(carry)->second;
    for (std::size_t t = 0; t < T; ++t) {
      const UtcSeconds when = start + static_cast<UtcSeconds>(t) * kSecondsPerHour;
      auto hit = obs[m].find(when);
      if (hit != obs[m].end()) current = hit->second;
      stack.series[m * T + t] = current;
    }
  }
  std::size_t fit = T;
  if (train_end) {
    require(*train_end > start, ErrorKind::invalid_input,
            "training boundary precedes the series start");
    fit = std::min<std::size_t>(
        T, static_cast<std::size_t>((*train_end - start) / kSecondsPerHour));
  }
  if (M > 0) standardize(stack, fit);
  return stack;
}

inline SeriesStack1D load_series(const std::filesystem::path& path,
                                 std::span<const std::string> names, UtcSeconds start,
                                 UtcSeconds end,
                                 std::optional<UtcSeconds> train_end = std::nullopt) {
  return load_series(csv::read(path), path.string(), names, start, end, train_end);
}

}  // namespace fairst
