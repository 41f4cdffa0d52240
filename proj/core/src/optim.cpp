// Copyright 2026 The bsmm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bsmm/optim.hpp"

#include <cmath>
#include <string>

#include "bsmm/error.hpp"

namespace bsmm {

Array adam_direction(AdamState& state, const Eigen::Ref<const Array>& grad) {
  if (grad.size() != state.f.size())
    throw DataError("ADAM state has " + std::to_string(state.f.size()) +
                    " entries, gradient has " + std::to_string(grad.size()));
  const auto& c = state.config;
  ++state.step_count;
  state.f = c.beta1 * state.f + (1.0 - c.beta1) * grad;
  state.s = c.beta2 * state.s + (1.0 - c.beta2) * grad.square();
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  return c.eta * (state.f / bias1) / ((state.s / bias2).sqrt() + c.eps_hat);
}

Array l1_subgradient(const Eigen::Ref<const Array>& t, const Eigen::Ref<const Array>& grad,
                     double omega) {
  Array out(grad.size());
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    if (t[i] != 0.0) {
      out[i] = g;
    } else if (g < -omega) {
      out[i] = g + omega;
    } else if (g > omega) {
      out[i] = g - omega;
    } else {
      out[i] = 0.0;
    }
  }
  return out;
}

Array orthant_project(const Eigen::Ref<const Array>& t, const Eigen::Ref<const Array>& d) {
  Array out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double moved = t[i] + d[i];
    out[i] = (t[i] * moved < 0.0) ? 0.0 : moved;
  }
  return out;
}

void update_T_rows(RowMatrix& T, const RowMatrix& smooth_grad, AdamState& state, double omega) {
  if (smooth_grad.rows() != T.rows() || smooth_grad.cols() != T.cols())
    throw DataError("T gradient shape does not match T");
  if (smooth_grad.hasNaN()) throw NumericalError("NaN in the gradient of T");
  const Eigen::Map<const Array> t(T.data(), T.size());
  const Eigen::Map<const Array> g(smooth_grad.data(), smooth_grad.size());
  Array full = g;
  if (omega != 0.0) full -= omega * t.sign();
  const Array d = adam_direction(state, l1_subgradient(t, full, omega));
  Eigen::Map<Array>(T.data(), T.size()) = orthant_project(t, d);
}

}  // namespace bsmm
