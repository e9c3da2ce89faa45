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
#include <cstddef>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/ingest/series.hpp"
#include "fairst/ingest/trips.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

inline constexpr std::size_t kDefaultWindow = 168;

struct TemporalSlice {
  Tensor history;     // (window, rows, cols)
  Tensor target;      // (rows, cols)
  Tensor history_1d;  // (M, window)
  std::size_t target_index = 0;
};

// Slice k: history = frames [k, k + window), target = frame k + window.
inline std::vector<TemporalSlice> make_slices(const DemandTensor& demand,
                                              const SeriesStack1D& series,
                                              std::size_t window) {
  const std::size_t T = demand.steps();
  require(window >= 1, ErrorKind::invalid_input, "window must be positive");
  require(T >= window + 1, ErrorKind::invalid_input, "demand has ", T,
          " steps, need at least window + 1 = ", window + 1);
  require(series.count() == 0 || series.steps() == T, ErrorKind::invalid_input,
          "series has ", series.steps(), " steps, demand has ", T);
  const std::size_t H = demand.rows();
  const std::size_t W = demand.cols();
  const std::size_t P = H * W;
  const std::size_t M = series.count();
  std::vector<TemporalSlice> slices;
  slices.reserve(T - window);
  for (std::size_t k = 0; k + window < T; ++k) {
    TemporalSlice s;
    const double* src = demand.values.data();
    s.history = Tensor(Shape{window, H, W},
                       std::vector<double>(src + k * P, src + (k + window) * P));
    s.target = Tensor(Shape{H, W}, std::vector<double>(src + (k + window) * P,
                                                       src + (k + window + 1) * P));
    s.history_1d = Tensor(Shape{M, window});
    for (std::size_t m = 0; m < M; ++m)
      std::copy_n(series.series.data() + m * T + k, window,
                  s.history_1d.data() + m * window);
    s.target_index = k + window;
    slices.push_back(std::move(s));
  }
  return slices;
}

}  // namespace fairst
