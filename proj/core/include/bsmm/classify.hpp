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

// Generative Gaussian linear classifiers over document embeddings.
//
// GLC models an embedding as w_d = mu_{c(d)} + e_d with e_d ~ N(0, D^-1)
// shared across classes. GLCU observes only the posterior mean nu_d and folds
// the posterior covariance Gamma_d^-1 in as a latent offset y_d ~ N(0,
// Gamma_d^-1), so nu_d ~ N(mu_{c(d)}, Gamma_d^-1 + D^-1). It is trained by EM.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bsmm/smm.hpp"

namespace bsmm {

struct GaussianLinearModel {
  Eigen::MatrixXd means;      // K x L, column l is mu_l
  Eigen::MatrixXd precision;  // K x K shared within-class precision D
  Vector log_priors;          // L

  std::size_t dim() const { return static_cast<std::size_t>(means.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(means.cols()); }
  Eigen::MatrixXd covariance() const;
  // Throws DataError unless shapes agree, D is symmetric positive definite and
  // the priors sum to one.
  void validate() const;
};

using GlcModel = GaussianLinearModel;
using GlcuModel = GaussianLinearModel;

struct ClassifierOptions {
  double gamma = 0.0;          // ridge added to the pooled covariance
  bool uniform_priors = false;  // otherwise empirical class frequencies
};

// Throws DataError when a class has no examples and NumericalError (suggesting
// a positive gamma) when the pooled within-class covariance is singular.
GlcModel glc_train(std::span<const Vector> embeddings, std::span<const std::size_t> labels,
                   std::size_t num_classes, const ClassifierOptions& opts = {});

struct LatentPosterior {
  Vector u;                // posterior mean of y_d
  Eigen::MatrixXd V_prec;  // posterior precision D + Gamma_d
  Eigen::MatrixXd V_cov;   // its inverse
};

// `gamma_d` is the diagonal of the embedding posterior precision.
LatentPosterior glcu_e_step(const GlcuModel& model, const Eigen::Ref<const Vector>& nu_d,
                            const Eigen::Ref<const Vector>& gamma_d,
                            const Eigen::Ref<const Vector>& mu_d);

// Means are re-estimated first and the covariance residuals a_d use them.
GlcuModel glcu_m_step(std::span<const Vector> nus, std::span<const LatentPosterior> latents,
                      std::span<const std::size_t> labels, std::size_t num_classes,
                      const ClassifierOptions& opts = {});

// sum_d log N(nu_d | mu_{c(d)}, Gamma_d^-1 + D^-1)
double glcu_log_likelihood(const GlcuModel& model, std::span<const Vector> nus,
                           std::span<const Vector> gammas, std::span<const std::size_t> labels);

struct GlcuTrainResult {
  GlcuModel model;
  // Entry 0 is the GLC initialization, entry i the value after EM iteration i.
  std::vector<double> log_likelihood;
};

// Throws UsageError for em_iters == 0 and NumericalError if the likelihood
// decreases by more than `monotonic_tol` in any iteration.
GlcuTrainResult glcu_train(std::span<const Posterior> posteriors,
                           std::span<const std::size_t> labels, std::size_t num_classes,
                           std::size_t em_iters, const ClassifierOptions& opts = {},
                           double monotonic_tol = 1e-9);

struct Prediction {
  std::size_t label = 0;
  Vector posterior;  // p(C_l | nu), sums to one
};

// Class posterior by Bayes' rule. Without `gamma` the GLC likelihood
// N(nu | mu_l, D^-1) is used; with it, N(nu | mu_l, Gamma^-1 + D^-1).
// Ties in the argmax go to the lowest class id.
Prediction predict(const GaussianLinearModel& model, const Eigen::Ref<const Vector>& nu,
                   const std::optional<Vector>& gamma = std::nullopt);

// Normalizes log-scores into probabilities and picks the argmax (lowest id on ties).
Prediction posterior_from_log_scores(const Eigen::Ref<const Vector>& log_scores);

}  // namespace bsmm
