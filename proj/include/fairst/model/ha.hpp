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

#include <cstddef>

#include "fairst/error.hpp"
#include "fairst/ingest/time.hpp"
#include "fairst/ingest/trips.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

// Historical Average: per-cell mean of every frame before `target_time` that
// shares its hour of day and day of week.
inline Tensor ha_predict(const DemandTensor& history, UtcSeconds target_time) {
  const int hour = hour_of_day(target_time);
  const int dow = day_of_week(target_time);
  const std::size_t P = history.cells();
  Tensor out(Shape{history.rows(), history.cols()});
  std::size_t matches = 0;
  for (std::size_t t = 0; t < history.steps(); ++t) {
    const UtcSeconds when = history.time_at(t);
    if (when >= target_time) break;
    if (hour_of_day(when) != hour || day_of_week(when) != dow) continue;
    const auto frame = history.frame(t);
    for (std::size_t i = 0; i < P; ++i) out[i] += frame[i];
    ++matches;
  }
  require(matches > 0, ErrorKind::invalid_input,
          "no prior frame shares hour-of-day and day-of-week with ",
          format_rfc3339(target_time));
  out *= 1.0 / static_cast<double>(matches);
  return out;
}

}  // namespace fairst
