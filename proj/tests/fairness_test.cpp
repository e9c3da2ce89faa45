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

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fairst/fairness/groups.hpp"
#include "fairst/fairness/losses.hpp"
#include "fairst/fairness/metrics.hpp"
#include "oracles.hpp"

namespace fairst {
namespace {

DemographicField two_cells(double pa, double pb, double wa, double wb) {
  return make_field(1, 2, {pa, pb}, {{"race", {wa, wb}}});
}

DemandTensor frames(std::size_t rows, std::size_t cols, const std::vector<double>& values) {
  DemandTensor d;
  const std::size_t steps = values.size() / (rows * cols);
  d.values = Tensor(Shape{steps, rows, cols}, values);
  return d;
}

struct RandomCase {
  DemographicField field;
  std::vector<double> pred, truth;
};

RandomCase random_case(std::mt19937_64& rng, std::size_t cells) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pop(cells), w(cells), income(cells), pred(cells), truth(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    pop[i] = 0.05 + u(rng);
    w[i] = u(rng);
    income[i] = u(rng);
    pred[i] = 10 * u(rng);
    truth[i] = 10 * u(rng);
  }
  // Force both groups to be present at threshold 0.5.
  w[0] = 0.9;
  w[1] = 0.1;
  return {make_field(1, cells, pop, {{"race", w}, {"income", income}}), pred, truth};
}

std::vector<int> int_labels(const GroupLabeling& l) {
  std::vector<int> out;
  for (GroupLabel g : l.labels)
    out.push_back(g == GroupLabel::advantaged ? 1 : g == GroupLabel::disadvantaged ? 0 : -1);
  return out;
}

TEST(Groups, StrictThreshold) {
  const DemographicField f = make_field(1, 3, {1, 1, 0}, {{"race", {0.70, 0.6574, 0.9}}});
  const GroupLabeling l = discretize_groups(f, "race", 0.6574);
  EXPECT_EQ(l.labels[0], GroupLabel::advantaged);
  EXPECT_EQ(l.labels[1], GroupLabel::disadvantaged);
  EXPECT_EQ(l.labels[2], GroupLabel::excluded);
  EXPECT_THROW(discretize_groups(f, "race", 1.5), Error);
  EXPECT_THROW(discretize_groups(f, "age", 0.5), Error);
  EXPECT_EQ(l.swapped().labels[0], GroupLabel::disadvantaged);
}

TEST(Metrics, TwoCellFixtures) {
  const DemographicField f = two_cells(0.6, 0.4, 1.0, 0.0);
  const GroupLabeling l = discretize_groups(f, "race", 0.5);
  // Period means 12 and 4 from two frames.
  const DemandTensor pred = frames(1, 2, {10, 3, 14, 5});
  EXPECT_EQ(rfg(pred, l, f), 10.0);
  EXPECT_NEAR(rfg(pred, l, f), oracle::region_gap({12, 4}, {0.6, 0.4}, {1, 0}), 1e-12);

  const DemographicField g = two_cells(0.5, 0.5, 1.0, 0.0);
  const DemandTensor pi = frames(1, 2, {10, 5});
  EXPECT_EQ(ifg(pi, g, "race"), 10.0);
}

TEST(Metrics, DegenerateGroupsAreErrors) {
  const DemographicField f = two_cells(0.5, 0.5, 0.9, 0.8);
  const GroupLabeling l = discretize_groups(f, "race", 0.5);
  try {
    rfg(frames(1, 2, {1, 1}), l, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_group);
  }
  EXPECT_THROW(ifg(frames(1, 2, {1, 1}), two_cells(0.5, 0.5, 1.0, 1.0), "race"), Error);
}

TEST(Metrics, MatchOraclesHomogeneousAndAntisymmetric) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    RandomCase c = random_case(rng, 9);
    const GroupLabeling l = discretize_groups(c.field, "race", 0.5);
    const DemandTensor pred = frames(1, 9, c.pred);
    const double r = rfg(pred, l, c.field);
    const double i = ifg(pred, c.field, "race");
    EXPECT_NEAR(r, oracle::region_gap(c.pred, c.field.population_share, int_labels(l)),
                1e-12 * std::max(1.0, std::fabs(r)));
    EXPECT_NEAR(i, oracle::individual_gap(c.pred, c.field.population_share,
                                          c.field.attribute("race")),
                1e-12 * std::max(1.0, std::fabs(i)));
    Tensor doubled = pred.values;
    doubled *= 2.0;
    DemandTensor p2 = pred;
    p2.values = doubled;
    EXPECT_NEAR(rfg(p2, l, c.field), 2 * r, 1e-12 * std::fabs(r));
    EXPECT_NEAR(ifg(p2, c.field, "race"), 2 * i, 1e-12 * std::fabs(i));
    EXPECT_NEAR(rfg(pred, l.swapped(), c.field), -r, 1e-12 * std::fabs(r));
  }
}

TEST(Metrics, ZeroAtFair) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    RandomCase c = random_case(rng, 12);
    std::vector<double> prop(12);
    for (std::size_t i = 0; i < 12; ++i) prop[i] = 37.0 * c.field.population_share[i];
    const GroupLabeling l = discretize_groups(c.field, "race", 0.5);
    EXPECT_LT(std::fabs(rfg(frames(1, 12, prop), l, c.field)), 1e-12);
    EXPECT_LT(std::fabs(ifg(frames(1, 12, prop), c.field, "race")), 1e-12);
    EXPECT_LT(rf_loss(prop, c.truth, l, c.field).value, 1e-12);
    EXPECT_LT(if_loss(prop, c.truth, c.field, "race").value, 1e-12);
  }
}

TEST(Losses, Fixtures) {
  const DemographicField rf = two_cells(0.6, 0.4, 1.0, 0.0);
  const GroupLabeling l = discretize_groups(rf, "race", 0.5);
  const std::vector<double> truth20{15, 5};
  EXPECT_NEAR(rf_loss(std::vector<double>{12, 4}, truth20, l, rf).value, 0.5, 1e-12);

  const DemographicField half = two_cells(0.5, 0.5, 1.0, 0.0);
  const GroupLabeling hl = discretize_groups(half, "race", 0.5);
  EXPECT_NEAR(if_loss(std::vector<double>{10, 5}, truth20, half, "race").value, 0.5, 1e-12);
  // z-hat 20 vs 10.
  EXPECT_NEAR(em_loss(std::vector<double>{10, 5}, truth20, hl, half).value, 0.5, 1e-12);
  // Equal true z, so d = 1; z-hat gap 3; sum of truth 10.
  EXPECT_NEAR(pairwise_loss(std::vector<double>{2.5, 1.0}, std::vector<double>{5, 5}, hl, half)
                  .value,
              0.09, 1e-12);
}

TEST(Losses, DemandFloorAndNonnegativity) {
  const DemographicField half = two_cells(0.5, 0.5, 1.0, 0.0);
  const GroupLabeling hl = discretize_groups(half, "race", 0.5);
  const std::vector<double> zero{0, 0}, pred{3, 1};
  EXPECT_NEAR(rf_loss(pred, zero, hl, half).value, 4.0, 1e-12);  // gap 4 over y_min 1
  EXPECT_NEAR(rf_loss(pred, zero, hl, half, 2.0).value, 2.0, 1e-12);
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    RandomCase c = random_case(rng, 6);
    for (double& v : c.pred) v -= 5.0;
    const GroupLabeling l = discretize_groups(c.field, "race", 0.5);
    EXPECT_GE(rf_loss(c.pred, c.truth, l, c.field).value, 0.0);
    EXPECT_GE(if_loss(c.pred, c.truth, c.field, "race").value, 0.0);
    EXPECT_GE(em_loss(c.pred, c.truth, l, c.field).value, 0.0);
    EXPECT_GE(pairwise_loss(c.pred, c.truth, l, c.field).value, 0.0);
  }
}

TEST(Losses, EqualMeansIgnoresAnExtraCellAtTheGroupMean) {
  const DemographicField two = two_cells(0.5, 0.5, 1.0, 0.0);
  const GroupLabeling l2 = discretize_groups(two, "race", 0.5);
  const double base = em_loss(std::vector<double>{10, 5}, std::vector<double>{10, 10}, l2, two).value;
  const DemographicField three = make_field(1, 3, {0.5, 0.5, 0.25}, {{"race", {1.0, 0.0, 1.0}}});
  const GroupLabeling l3 = discretize_groups(three, "race", 0.5);
  // Shares renormalize to 0.4, 0.4, 0.2; z-hat of the new cell matches cell 0.
  const double p0 = three.population_share[0], p1 = three.population_share[1],
               p2 = three.population_share[2];
  const std::vector<double> pred{20 * p0, 10 * p1, 20 * p2};
  EXPECT_NEAR(em_loss(pred, std::vector<double>{10, 10, 0}, l3, three).value, base, 1e-12);
}

TEST(Losses, PairwiseSimilarityFades) {
  const DemographicField half = two_cells(0.5, 0.5, 1.0, 0.0);
  const GroupLabeling hl = discretize_groups(half, "race", 0.5);
  const std::vector<double> pred{2.5, 1.0};
  const double near = pairwise_loss(pred, std::vector<double>{5, 5}, hl, half).value;
  const double far = pairwise_loss(pred, std::vector<double>{9, 1}, hl, half).value;
  EXPECT_GT(near, 0.0);
  EXPECT_LT(far, 1e-20);
}

TEST(Losses, SingleFrameMatchesMetric) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    RandomCase c = random_case(rng, 8);
    const GroupLabeling l = discretize_groups(c.field, "race", 0.5);
    double total = 0.0;
    for (double y : c.truth) total += y;
    EXPECT_NEAR(rf_loss(c.pred, c.truth, l, c.field).value * total,
                std::fabs(rfg(frames(1, 8, c.pred), l, c.field)), 1e-10);
    EXPECT_NEAR(if_loss(c.pred, c.truth, c.field, "race").value * total,
                std::fabs(ifg(frames(1, 8, c.pred), c.field, "race")), 1e-10);
  }
}

// The losses are piecewise linear or quadratic in the prediction, so a wide
// central step is exact up to round-off away from the kink.
TEST(Losses, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(16);
  using Fn = std::function<LossValue(const std::vector<double>&, const RandomCase&,
                                     const GroupLabeling&)>;
  const std::vector<std::pair<const char*, Fn>> losses = {
      {"rf", [](const auto& p, const auto& c, const auto& l) { return rf_loss(p, c.truth, l, c.field); }},
      {"if", [](const auto& p, const auto& c, const auto&) { return if_loss(p, c.truth, c.field, "race"); }},
      {"em", [](const auto& p, const auto& c, const auto& l) { return em_loss(p, c.truth, l, c.field); }},
      {"pw", [](const auto& p, const auto& c, const auto& l) { return pairwise_loss(p, c.truth, l, c.field); }},
  };
  for (int trial = 0; trial < 10; ++trial) {
    const RandomCase c = random_case(rng, 7);
    const GroupLabeling l = discretize_groups(c.field, "race", 0.5);
    for (const auto& [name, fn] : losses) {
      const LossValue analytic = fn(c.pred, c, l);
      const auto numeric = oracle::finite_difference(
          [&](const Tensor& x) { return fn(x.storage(), c, l).value; },
          Tensor(Shape{7}, c.pred), 1e-3);
      for (std::size_t i = 0; i < 7; ++i)
        EXPECT_LT(oracle::gradient_error(analytic.gradient[i], numeric[i], 1e-8), 1e-6)
            << name << " trial " << trial << " cell " << i;
    }
  }
}

TEST(Losses, CompositeWeights) {
  std::mt19937_64 rng(17);
  const RandomCase c = random_case(rng, 6);
  FairnessConfig cfg;
  cfg.kind = RegularizerKind::rf;
  cfg.lambda = 1.0;
  cfg.attributes = {{"race", 2.0, 0.5}, {"income", 0.0, 0.5}};
  const std::vector<GroupLabeling> labelings{discretize_groups(c.field, "race", 0.5),
                                             discretize_groups(c.field, "income", 0.5)};
  const LossValue one = rf_loss(c.pred, c.truth, labelings[0], c.field);
  const LossValue both = composite_loss(c.pred, c.truth, cfg, c.field, labelings);
  EXPECT_NEAR(both.value, 2.0 * one.value, 1e-12);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(both.gradient[i], 2.0 * one.gradient[i], 1e-12);

  cfg.kind = RegularizerKind::individual;
  cfg.attributes = {{"race", 1.0, 0.5}, {"income", 1.0, 0.5}};
  EXPECT_NEAR(composite_loss(c.pred, c.truth, cfg, c.field, labelings).value,
              if_loss(c.pred, c.truth, c.field, "race").value +
                  if_loss(c.pred, c.truth, c.field, "income").value,
              1e-12);
  cfg.attributes = {{"age", 1.0, 0.5}};
  EXPECT_THROW(composite_loss(c.pred, c.truth, cfg, c.field, labelings), Error);
  cfg.kind = RegularizerKind::none;
  EXPECT_EQ(composite_loss(c.pred, c.truth, cfg, c.field, labelings).value, 0.0);
}

TEST(Metrics, GapReportCsv) {
  const DemographicField f = two_cells(0.6, 0.4, 1.0, 0.0);
  const std::vector<GroupLabeling> l{discretize_groups(f, "race", 0.5)};
  const GapReport r = gap_report(frames(1, 2, {12, 4}), f, l, kDefaultPopulationFloor);
  ASSERT_EQ(r.attributes.size(), 1u);
  EXPECT_EQ(r.attributes[0].rfg, 10.0);
  EXPECT_EQ(r.to_csv(), "attribute,metric,value\nrace,rfg,10\nrace,ifg,10\n");
}

}  // namespace
}  // namespace fairst
