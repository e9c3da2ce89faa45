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
#include <cstdint>
#include <span>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

inline AdamState make_adam_state(std::span<const Tensor> params) {
  AdamState state;
  for (const Tensor& p : params) {
    state.first_moment.emplace_back(p.shape());
    state.second_moment.emplace_back(p.shape());
  }
  return state;
}

// One bias-corrected Adam update, in place.
inline void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
                      AdamState& state, double lr) {
  require(params.size() == grads.size() &&
              params.size() == state.first_moment.size(),
          ErrorKind::invalid_input, "adam_step: ", params.size(),
          " parameters, ", grads.size(), " gradients, ",
          state.first_moment.size(), " moment slots");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    const Tensor& g = grads[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    require(g.shape() == p.shape() && m.shape() == p.shape(),
            ErrorKind::invalid_input, "adam_step: shape mismatch for slot ", k);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

// Staircase exponential decay: initial * rate^floor(step / every).
struct LearningRateSchedule {
  double initial = 0.005;
  double decay_rate = 0.96;
  std::uint64_t decay_steps = 5000;

  double at(std::uint64_t step) const {
    const auto stages = static_cast<double>(step / decay_steps);
    return initial * std::pow(decay_rate, stages);
  }
};

inline double lr_at(std::uint64_t step) { return LearningRateSchedule{}.at(step); }

}  // namespace fairst
