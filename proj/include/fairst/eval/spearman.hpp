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
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "fairst/error.hpp"

namespace fairst {

// Largest sample size whose p-value is computed by full enumeration.
inline constexpr std::size_t kExactPermutationLimit = 8;

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
};

// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, ErrorKind::undefined_correlation,
          "correlation undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Rank correlation with a two-sided p-value: exact permutation distribution
// for n <= 8, Student-t approximation with n - 2 degrees of freedom above.
inline SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::invalid_input, "spearman: ", x.size(),
          " vs ", y.size(), " values");
  const std::size_t n = x.size();
  require(n >= 3, ErrorKind::invalid_input, "spearman needs n >= 3, got ", n);
  for (std::size_t i = 0; i < n; ++i)
    require(std::isfinite(x[i]) && std::isfinite(y[i]), ErrorKind::invalid_input,
            "spearman inputs must be finite");
  const std::vector<double> rx = fractional_ranks(x);
  const std::vector<double> ry = fractional_ranks(y);
  SpearmanResult out;
  out.rho = pearson(rx, ry);
  if (n <= kExactPermutationLimit) {
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    const double observed = std::fabs(out.rho);
    const double tol = 1e-12;
    std::size_t extreme = 0, total = 0;
    do {
      ++total;
      if (std::fabs(pearson(rx, perm)) >= observed - tol) ++extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    // next_permutation skips duplicate arrangements of tied ranks; every
    // distinct arrangement stands for the same number of raw permutations.
    out.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  } else if (std::fabs(out.rho) >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double dof = static_cast<double>(n - 2);
    const double t = out.rho * std::sqrt(dof / (1.0 - out.rho * out.rho));
    const boost::math::students_t dist(dof);
    out.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))),
                             0.0, 1.0);
  }
  return out;
}

}  // namespace fairst
