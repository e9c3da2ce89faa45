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
#include <optional>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/eval/spearman.hpp"
#include "fairst/fairness/groups.hpp"
#include "fairst/fairness/losses.hpp"
#include "fairst/fairness/metrics.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/trips.hpp"
#include "fairst/tensor/archive.hpp"

namespace fairst {

inline double mae(const DemandTensor& pred, const DemandTensor& truth) {
  require(pred.values.shape() == truth.values.shape(), ErrorKind::invalid_input,
          "MAE shape mismatch: ", shape_string(pred.values.shape()), " vs ",
          shape_string(truth.values.shape()));
  require(truth.values.size() > 0, ErrorKind::invalid_input, "MAE of empty tensors");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i)
    total += std::fabs(pred.values[i] - truth.values[i]);
  return total / static_cast<double>(truth.values.size());
}

struct AttributeReport {
  std::string attribute;
  double rfg = 0.0;
  double ifg = 0.0;
  double rho = 0.0;
  double p_value = 1.0;
};

struct EvalReport {
  bool on_ground_truth = false;
  double mae = 0.0;
  std::vector<AttributeReport> attributes;

  // `metric,attribute,value,p_value`; p_value is empty except for rho.
  std::string to_csv() const {
    std::string out = "metric,attribute,value,p_value\n";
    out += "mae,," + csv::format_double(mae) + ",\n";
    for (const AttributeReport& a : attributes) {
      out += "rfg," + a.attribute + "," + csv::format_double(a.rfg) + ",\n";
      out += "ifg," + a.attribute + "," + csv::format_double(a.ifg) + ",\n";
      out += "spearman_rho," + a.attribute + "," + csv::format_double(a.rho) + "," +
             csv::format_double(a.p_value) + "\n";
    }
    return out;
  }

  static EvalReport from_csv(const std::string& text, bool on_ground_truth = false) {
    const csv::Table table = csv::parse(text, "report");
    require(table.header == std::vector<std::string>{"metric", "attribute", "value",
                                                      "p_value"},
            ErrorKind::data, "report: unexpected header");
    EvalReport report;
    report.on_ground_truth = on_ground_truth;
    auto attribute = [&](const std::string& name) -> AttributeReport& {
      for (AttributeReport& a : report.attributes)
        if (a.attribute == name) return a;
      report.attributes.push_back({name});
      return report.attributes.back();
    };
    for (const csv::Row& row : table.rows) {
      const auto value = csv::to_double(row.fields[2]);
      require(value.has_value(), ErrorKind::data, "report:", row.line, ": bad value");
      const std::string& metric = row.fields[0];
      if (metric == "mae") {
        report.mae = *value;
      } else if (metric == "rfg") {
        attribute(row.fields[1]).rfg = *value;
      } else if (metric == "ifg") {
        attribute(row.fields[1]).ifg = *value;
      } else if (metric == "spearman_rho") {
        AttributeReport& a = attribute(row.fields[1]);
        a.rho = *value;
        const auto p = csv::to_double(row.fields[3]);
        require(p.has_value(), ErrorKind::data, "report:", row.line, ": bad p_value");
        a.p_value = *p;
      } else {
        fail(ErrorKind::data, "report:", row.line, ": unknown metric '", metric, "'");
      }
    }
    return report;
  }
};

// Per-cell mean per-capita demand over the period paired with w+, excluded
// cells (p_i < p_min) dropped.
struct RankPairs {
  std::vector<double> per_capita;
  std::vector<double> advantaged;
};

inline RankPairs per_capita_pairs(const std::vector<double>& mean_demand,
                                  const DemographicField& field,
                                  const std::string& attribute, double p_min) {
  const std::vector<double>& w = field.attribute(attribute);
  RankPairs pairs;
  for (std::size_t i = 0; i < mean_demand.size(); ++i) {
    const double p = field.population_share[i];
    if (p < p_min) continue;
    pairs.per_capita.push_back(mean_demand[i] / p);
    pairs.advantaged.push_back(w[i]);
  }
  return pairs;
}

// MAE of pred against truth, plus per-attribute RFG / IFG and Spearman's rho
// between mean per-capita demand and w+, all computed on `pred`.
inline EvalReport evaluate(const DemandTensor& pred, const DemandTensor& truth,
                           const DemographicField& field,
                           const std::vector<GroupLabeling>& labelings,
                           const FairnessConfig& config) {
  EvalReport report;
  report.mae = mae(pred, truth);
  const std::vector<double> mean_demand = period_mean(pred);
  for (const AttributeSetting& a : config.attributes) {
    AttributeReport ar{a.name};
    ar.rfg = region_weights(find_labeling(labelings, a.name), field).gap(mean_demand);
    ar.ifg = individual_weights(field, a.name, config.p_min).gap(mean_demand);
    const RankPairs pairs = per_capita_pairs(mean_demand, field, a.name, config.p_min);
    // A constant side (e.g. a population-proportional forecast) has no rank
    // association: report rho 0, p 1 rather than failing the whole report.
    try {
      const SpearmanResult s = spearman(pairs.per_capita, pairs.advantaged);
      ar.rho = s.rho;
      ar.p_value = s.p_value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_correlation) throw;
      ar.rho = 0.0;
      ar.p_value = 1.0;
    }
    report.attributes.push_back(ar);
  }
  return report;
}

// The same report computed on the ground truth itself.
inline EvalReport evaluate_ground_truth(const DemandTensor& truth,
                                        const DemographicField& field,
                                        const std::vector<GroupLabeling>& labelings,
                                        const FairnessConfig& config) {
  EvalReport report = evaluate(truth, truth, field, labelings, config);
  report.on_ground_truth = true;
  return report;
}

}  // namespace fairst
