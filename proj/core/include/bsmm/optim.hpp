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

#pragma once

// ADAM in the ascent convention, plus the orthant-wise pieces used for the
// L1-penalized subspace rows: sub-gradient selection at zero and projection
// back onto the orthant the coordinate started in.

#include <cstdint>

#include <Eigen/Core>

#include "bsmm/smm.hpp"

namespace bsmm {

using Array = Eigen::ArrayXd;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  double eta = 0.05;
};

struct AdamState {
  AdamConfig config;
  Array f;  // first moment
  Array s;  // second moment
  std::uint64_t step_count = 0;

  AdamState() = default;
  AdamState(std::size_t size, AdamConfig cfg)
      : config(cfg), f(Array::Zero(static_cast<Eigen::Index>(size))),
        s(Array::Zero(static_cast<Eigen::Index>(size))) {}
};

// Updates the moments with `grad` and returns the bias-corrected step
// d = eta * f_hat / (sqrt(s_hat) + eps_hat). Parameters move by +d.
Array adam_direction(AdamState& state, const Eigen::Ref<const Array>& grad);

// Sub-gradient of the penalized objective. `grad` already contains the
// -omega * sign(t) term wherever t != 0; at t == 0 the gradient is shrunk
// toward zero by omega and zeroed inside the dead zone |grad| <= omega.
Array l1_subgradient(const Eigen::Ref<const Array>& t, const Eigen::Ref<const Array>& grad,
                     double omega);

// Coordinates whose step would cross zero land on exactly 0.0.
Array orthant_project(const Eigen::Ref<const Array>& t, const Eigen::Ref<const Array>& d);

// One orthant-wise ADAM step on T given the smooth (data) gradient.
// Throws NumericalError if the gradient has a NaN.
void update_T_rows(RowMatrix& T, const RowMatrix& smooth_grad, AdamState& state, double omega);

}  // namespace bsmm
