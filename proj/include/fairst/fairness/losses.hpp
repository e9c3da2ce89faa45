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

// Per-frame fairness losses with their gradients w.r.t. the predicted frame.
//
// Every loss is normalized by N = max(sum of true demand over all cells,
// y_min). Absolute values use subgradient 0 at the kink.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/fairness/groups.hpp"
#include "fairst/fairness/metrics.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/tensor/autodiff.hpp"

namespace fairst {

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d prediction, one per cell
};

inline double demand_normalizer(std::span<const double> truth, double y_min) {
  double total = 0.0;
  for (double y : truth) total += y;
  return std::max(total, y_min);
}

namespace detail {

inline void check_frames(std::span<const double> pred, std::span<const double> truth,
                         const DemographicField& field) {
  require(pred.size() == field.cells() && truth.size() == field.cells(),
          ErrorKind::invalid_input, "frame sizes ", pred.size(), "/", truth.size(),
          " do not match the field's ", field.cells(), " cells");
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// |gap| / N for a linear gap.
inline LossValue absolute_gap_loss(const GapWeights& w, std::span<const double> pred,
                                   std::span<const double> truth, double y_min) {
  const double norm = demand_normalizer(truth, y_min);
  const double gap = w.gap(pred);
  LossValue out{std::fabs(gap) / norm, std::vector<double>(pred.size(), 0.0)};
  const double s = sign(gap) / norm;
  if (s != 0.0)
    for (std::size_t i = 0; i < pred.size(); ++i) out.gradient[i] = s * w.slope(i);
  return out;
}

struct GroupMembers {
  std::vector<std::size_t> advantaged;
  std::vector<std::size_t> disadvantaged;
};

inline GroupMembers members(const GroupLabeling& labels) {
  GroupMembers m;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (labels.labels[i] == GroupLabel::advantaged) m.advantaged.push_back(i);
    if (labels.labels[i] == GroupLabel::disadvantaged) m.disadvantaged.push_back(i);
  }
  require(!m.advantaged.empty() && !m.disadvantaged.empty(),
          ErrorKind::degenerate_group, "attribute '", labels.attribute, "': ",
          m.advantaged.empty() ? "advantaged" : "disadvantaged", " group is empty");
  return m;
}

}  // namespace detail

// Region-based loss: |per-capita gap between labeled groups| / N.
inline LossValue rf_loss(std::span<const double> pred, std::span<const double> truth,
                         const GroupLabeling& labels, const DemographicField& field,
                         double y_min = kDefaultDemandFloor) {
  detail::check_frames(pred, truth, field);
  return detail::absolute_gap_loss(region_weights(labels, field), pred, truth, y_min);
}

// Individual-based loss: demand apportioned by w+ / w- inside every cell.
inline LossValue if_loss(std::span<const double> pred, std::span<const double> truth,
                         const DemographicField& field, const std::string& attribute,
                         double p_min = kDefaultPopulationFloor,
                         double y_min = kDefaultDemandFloor) {
  detail::check_frames(pred, truth, field);
  return detail::absolute_gap_loss(individual_weights(field, attribute, p_min), pred,
                                   truth, y_min);
}

// Equal Means over per-capita predictions z_i = pred_i / p_i:
// |mean_{G+} z - mean_{G-} z| / N.
inline LossValue em_loss(std::span<const double> pred, std::span<const double> truth,
                         const GroupLabeling& labels, const DemographicField& field,
                         double y_min = kDefaultDemandFloor) {
  detail::check_frames(pred, truth, field);
  const detail::GroupMembers m = detail::members(labels);
  const double norm = demand_normalizer(truth, y_min);
  const auto& p = field.population_share;
  const double n_plus = static_cast<double>(m.advantaged.size());
  const double n_minus = static_cast<double>(m.disadvantaged.size());
  double mean_plus = 0.0, mean_minus = 0.0;
  for (std::size_t i : m.advantaged) mean_plus += pred[i] / p[i];
  for (std::size_t j : m.disadvantaged) mean_minus += pred[j] / p[j];
  mean_plus /= n_plus;
  mean_minus /= n_minus;
  const double gap = mean_plus - mean_minus;
  LossValue out{std::fabs(gap) / norm, std::vector<double>(pred.size(), 0.0)};
  const double s = detail::sign(gap) / norm;
  if (s != 0.0) {
    for (std::size_t i : m.advantaged) out.gradient[i] = s / (n_plus * p[i]);
    for (std::size_t j : m.disadvantaged) out.gradient[j] = -s / (n_minus * p[j]);
  }
  return out;
}

// Pairwise group penalty over cross pairs (i in G+, j in G-), each weighted by
// the similarity exp(-(z_i - z_j)^2) of the true per-capita demands:
// (mean_pairs d_ij (zhat_i - zhat_j) / N)^2.
inline LossValue pairwise_loss(std::span<const double> pred,
                               std::span<const double> truth,
                               const GroupLabeling& labels,
                               const DemographicField& field,
                               double y_min = kDefaultDemandFloor) {
  detail::check_frames(pred, truth, field);
  const detail::GroupMembers m = detail::members(labels);
  const double norm = demand_normalizer(truth, y_min);
  const auto& p = field.population_share;
  const double pairs =
      static_cast<double>(m.advantaged.size()) * static_cast<double>(m.disadvantaged.size());
  std::vector<double> row_weight(pred.size(), 0.0);  // sum of d over partners
  double acc = 0.0;
  for (std::size_t i : m.advantaged) {
    const double zi = truth[i] / p[i];
    const double zhat_i = pred[i] / p[i];
    for (std::size_t j : m.disadvantaged) {
      const double diff = zi - truth[j] / p[j];
      const double d = std::exp(-diff * diff);
      acc += d * (zhat_i - pred[j] / p[j]);
      row_weight[i] += d;
      row_weight[j] += d;
    }
  }
  const double mean = acc / pairs;
  const double inner = mean / norm;
  LossValue out{inner * inner, std::vector<double>(pred.size(), 0.0)};
  const double outer = 2.0 * inner / (norm * pairs);
  for (std::size_t i : m.advantaged) out.gradient[i] = outer * row_weight[i] / p[i];
  for (std::size_t j : m.disadvantaged) out.gradient[j] = -outer * row_weight[j] / p[j];
  return out;
}

// Labeling for `attribute`, or an invalid-input error.
inline const GroupLabeling& find_labeling(const std::vector<GroupLabeling>& labelings,
                                          const std::string& attribute) {
  for (const GroupLabeling& l : labelings)
    if (l.attribute == attribute) return l;
  fail(ErrorKind::invalid_input, "no group labeling for attribute '", attribute, "'");
}

inline LossValue attribute_loss(RegularizerKind kind, std::span<const double> pred,
                                std::span<const double> truth,
                                const std::string& attribute,
                                const FairnessConfig& config,
                                const DemographicField& field,
                                const std::vector<GroupLabeling>& labelings) {
  switch (kind) {
    case RegularizerKind::rf:
      return rf_loss(pred, truth, find_labeling(labelings, attribute), field, config.y_min);
    case RegularizerKind::individual:
      return if_loss(pred, truth, field, attribute, config.p_min, config.y_min);
    case RegularizerKind::equal_means:
      return em_loss(pred, truth, find_labeling(labelings, attribute), field, config.y_min);
    case RegularizerKind::pairwise:
      return pairwise_loss(pred, truth, find_labeling(labelings, attribute), field,
                           config.y_min);
    case RegularizerKind::none:
      break;
  }
  return LossValue{0.0, std::vector<double>(pred.size(), 0.0)};
}

// Sum over configured attributes of weight_a * loss_a for one frame.
inline LossValue composite_loss(std::span<const double> pred,
                                std::span<const double> truth,
                                const FairnessConfig& config,
                                const DemographicField& field,
                                const std::vector<GroupLabeling>& labelings) {
  detail::check_frames(pred, truth, field);
  LossValue total{0.0, std::vector<double>(pred.size(), 0.0)};
  if (config.kind == RegularizerKind::none) return total;
  require(!config.attributes.empty(), ErrorKind::invalid_input,
          "fairness regularizer configured without attributes");
  for (const AttributeSetting& a : config.attributes) {
    require(field.advantaged.count(a.name) > 0, ErrorKind::invalid_input,
            "unknown sensitive attribute '", a.name, "'");
    if (a.weight == 0.0) continue;
    const LossValue part =
        attribute_loss(config.kind, pred, truth, a.name, config, field, labelings);
    total.value += a.weight * part.value;
    for (std::size_t i = 0; i < pred.size(); ++i)
      total.gradient[i] += a.weight * part.gradient[i];
  }
  return total;
}

// Records the composite loss of a predicted frame on its tape.
inline ad::Var composite_loss_var(ad::Var pred, const Tensor& truth,
                                  const FairnessConfig& config,
                                  const DemographicField& field,
                                  const std::vector<GroupLabeling>& labelings) {
  return ad::scalar_function(pred, [&](std::span<const double> values) {
    LossValue loss = composite_loss(values, truth.values(), config, field, labelings);
    return ad::ScalarEvaluation{loss.value, std::move(loss.gradient)};
  });
}

}  // namespace fairst
