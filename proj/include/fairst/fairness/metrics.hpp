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

// Region- and individual-based fairness gaps. Both are signed differences of
// per-capita demand between the advantaged and the disadvantaged group.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/fairness/groups.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/trips.hpp"

namespace fairst {

// Weight a cell contributes to each side of a gap, and the matching
// population mass that side is divided by.
struct GapWeights {
  std::vector<double> advantaged;     // numerator weight per cell, G+ side
  std::vector<double> disadvantaged;  // numerator weight per cell, G- side
  double advantaged_mass = 0.0;
  double disadvantaged_mass = 0.0;

  double gap(std::span<const double> values) const {
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      plus += advantaged[i] * values[i];
      minus += disadvantaged[i] * values[i];
    }
    return plus / advantaged_mass - minus / disadvantaged_mass;
  }

  // d gap / d values[i].
  double slope(std::size_t i) const {
    return advantaged[i] / advantaged_mass - disadvantaged[i] / disadvantaged_mass;
  }
};

inline GapWeights region_weights(const GroupLabeling& labels,
                                 const DemographicField& field) {
  require(labels.labels.size() == field.cells(), ErrorKind::invalid_input,
          "labeling covers ", labels.labels.size(), " cells, field has ",
          field.cells());
  const std::size_t n = field.cells();
  GapWeights w{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.labels[i] == GroupLabel::advantaged) {
      w.advantaged[i] = 1.0;
      w.advantaged_mass += field.population_share[i];
    } else if (labels.labels[i] == GroupLabel::disadvantaged) {
      w.disadvantaged[i] = 1.0;
      w.disadvantaged_mass += field.population_share[i];
    }
  }
  require(w.advantaged_mass > 0.0 && w.disadvantaged_mass > 0.0,
          ErrorKind::degenerate_group, "attribute '", labels.attribute,
          "': ", w.advantaged_mass > 0.0 ? "disadvantaged" : "advantaged",
          " group is empty");
  return w;
}

inline GapWeights individual_weights(const DemographicField& field,
                                     const std::string& attribute,
                                     double p_min = kDefaultPopulationFloor) {
  const std::vector<double>& adv = field.attribute(attribute);
  const std::size_t n = field.cells();
  GapWeights w{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double p = field.population_share[i];
    if (p < p_min) continue;
    w.advantaged[i] = adv[i];
    w.disadvantaged[i] = 1.0 - adv[i];
    w.advantaged_mass += p * adv[i];
    w.disadvantaged_mass += p * (1.0 - adv[i]);
  }
  require(w.advantaged_mass > 0.0 && w.disadvantaged_mass > 0.0,
          ErrorKind::degenerate_group, "attribute '", attribute, "': ",
          w.advantaged_mass > 0.0 ? "disadvantaged" : "advantaged",
          " population mass is zero");
  return w;
}

// Per-cell mean over the time axis.
inline std::vector<double> period_mean(const DemandTensor& demand) {
  require(demand.steps() > 0, ErrorKind::invalid_input, "empty evaluation period");
  std::vector<double> mean(demand.cells(), 0.0);
  for (std::size_t t = 0; t < demand.steps(); ++t) {
    const auto frame = demand.frame(t);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += frame[i];
  }
  for (double& m : mean) m /= static_cast<double>(demand.steps());
  return mean;
}

inline double rfg(const DemandTensor& pred, const GroupLabeling& labels,
                  const DemographicField& field) {
  return region_weights(labels, field).gap(period_mean(pred));
}

inline double ifg(const DemandTensor& pred, const DemographicField& field,
                  const std::string& attribute, double p_min = kDefaultPopulationFloor) {
  return individual_weights(field, attribute, p_min).gap(period_mean(pred));
}

struct AttributeGaps {
  std::string attribute;
  double rfg = 0.0;
  double ifg = 0.0;
};

// Gaps per configured attribute over one period; CSV `attribute,metric,value`.
struct GapReport {
  std::vector<AttributeGaps> attributes;

  std::string to_csv() const {
    std::string out = "attribute,metric,value\n";
    for (const AttributeGaps& a : attributes) {
      out += a.attribute + ",rfg," + csv::format_double(a.rfg) + "\n";
      out += a.attribute + ",ifg," + csv::format_double(a.ifg) + "\n";
    }
    return out;
  }
};

inline GapReport gap_report(const DemandTensor& pred, const DemographicField& field,
                            const std::vector<GroupLabeling>& labelings, double p_min) {
  const std::vector<double> mean = period_mean(pred);
  GapReport report;
  for (const GroupLabeling& labels : labelings)
    report.attributes.push_back({labels.attribute, region_weights(labels, field).gap(mean),
                                 individual_weights(field, labels.attribute, p_min).gap(mean)});
  return report;
}

}  // namespace fairst
