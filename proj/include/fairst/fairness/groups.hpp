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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/ingest/demographics.hpp"

namespace fairst {

// Cells whose population share falls below this are left out of every
// fairness sum.
inline constexpr double kDefaultPopulationFloor = 1e-9;
// Lower bound on the per-frame demand normalizer, in trips.
inline constexpr double kDefaultDemandFloor = 1.0;

enum class GroupLabel : std::uint8_t { advantaged, disadvantaged, excluded };

struct GroupLabeling {
  std::string attribute;
  double threshold = 0.0;
  std::vector<GroupLabel> labels;

  std::size_t count(GroupLabel which) const {
    std::size_t n = 0;
    for (GroupLabel l : labels) n += l == which;
    return n;
  }

  // Swaps the advantaged and disadvantaged groups.
  GroupLabeling swapped() const {
    GroupLabeling out = *this;
    for (GroupLabel& l : out.labels) {
      if (l == GroupLabel::advantaged) {
        l = GroupLabel::disadvantaged;
      } else if (l == GroupLabel::disadvantaged) {
        l = GroupLabel::advantaged;
      }
    }
    return out;
  }
};

enum class RegularizerKind { none, rf, individual, equal_means, pairwise };

inline RegularizerKind parse_regularizer(std::string_view text) {
  if (text == "none") return RegularizerKind::none;
  if (text == "rf" || text == "RF") return RegularizerKind::rf;
  if (text == "if" || text == "IF") return RegularizerKind::individual;
  if (text == "em" || text == "EM") return RegularizerKind::equal_means;
  if (text == "pw" || text == "PW" || text == "pairwise") return RegularizerKind::pairwise;
  fail(ErrorKind::invalid_input, "unknown regularizer '", text,
       "' (expected none, rf, if, em or pw)");
}

inline const char* to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::none: return "none";
    case RegularizerKind::rf: return "rf";
    case RegularizerKind::individual: return "if";
    case RegularizerKind::equal_means: return "em";
    case RegularizerKind::pairwise: return "pw";
  }
  return "none";
}

struct AttributeSetting {
  std::string name;
  double weight = 1.0;     // lambda_a
  double threshold = 0.5;  // advantaged iff w+ > threshold
};

struct FairnessConfig {
  RegularizerKind kind = RegularizerKind::none;
  double lambda = 0.0;
  std::vector<AttributeSetting> attributes;
  double p_min = kDefaultPopulationFloor;
  double y_min = kDefaultDemandFloor;

  void validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::invalid_input,
            "fairness weight lambda must be >= 0, got ", lambda);
    require(p_min > 0.0, ErrorKind::invalid_input, "population floor must be > 0");
    require(y_min > 0.0, ErrorKind::invalid_input, "demand floor must be > 0");
    for (const AttributeSetting& a : attributes) {
      require(a.weight >= 0.0, ErrorKind::invalid_input, "attribute '", a.name,
              "' weight must be >= 0");
      require(a.threshold >= 0.0 && a.threshold <= 1.0, ErrorKind::invalid_input,
              "attribute '", a.name, "' threshold outside [0, 1]");
    }
  }
};

// Advantaged iff w+ > threshold (ties go to the disadvantaged group); cells
// with p_i < p_min are excluded.
inline GroupLabeling discretize_groups(const DemographicField& field,
                                       const std::string& attribute, double threshold,
                                       double p_min = kDefaultPopulationFloor) {
  require(threshold >= 0.0 && threshold <= 1.0, ErrorKind::invalid_input,
          "threshold ", threshold, " outside [0, 1]");
  const std::vector<double>& w = field.attribute(attribute);
  GroupLabeling out{attribute, threshold, {}};
  out.labels.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (field.population_share[i] < p_min) {
      out.labels.push_back(GroupLabel::excluded);
    } else {
      out.labels.push_back(w[i] > threshold ? GroupLabel::advantaged
                                            : GroupLabel::disadvantaged);
    }
  }
  return out;
}

inline std::vector<GroupLabeling> discretize_all(const DemographicField& field,
                                                 const FairnessConfig& config) {
  std::vector<GroupLabeling> out;
  for (const AttributeSetting& a : config.attributes)
    out.push_back(discretize_groups(field, a.name, a.threshold, config.p_min));
  return out;
}

}  // namespace fairst
