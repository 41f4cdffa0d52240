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

// Bayesian subspace multinomial model: model and posterior types, the
// per-document evidence lower bound and its analytic gradients.
//
// A document's word distribution is theta = softmax(m + T w) with
// w ~ N(0, I / lambda). The variational posterior q(w) = N(nu, diag(exp(2 lsd)))
// is optimized through the reparametrization w = nu + exp(lsd) * eps, and the
// expectation of the log-sum-exp normalizer is replaced by an average over R
// fixed standard-normal draws eps_r.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bsmm/corpus.hpp"

namespace bsmm {

using Vector = Eigen::VectorXd;
// Row i is the subspace row t_i of word i.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SmmModel {
  Vector m;     // V log-unigram scores
  RowMatrix T;  // V x K subspace
  double lambda = 1.0;

  std::size_t vocab_size() const { return static_cast<std::size_t>(m.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(T.cols()); }
  // Throws DataError on inconsistent shapes, non-finite values or lambda <= 0.
  void validate() const;
};

struct Posterior {
  Vector nu;   // mean
  Vector lsd;  // log standard deviation; covariance is diag(exp(2 lsd))

  std::size_t dim() const { return static_cast<std::size_t>(nu.size()); }
  Vector variance() const { return (2.0 * lsd.array()).exp().matrix(); }
  // Diagonal precision Gamma.
  Vector precision() const { return (-2.0 * lsd.array()).exp().matrix(); }

  friend bool operator==(const Posterior& a, const Posterior& b) {
    return a.nu == b.nu && a.lsd == b.lsd;
  }
};

// R x K standard-normal draws; row r is eps_r.
struct EpsilonSamples {
  Eigen::MatrixXd eps;

  Eigen::Index count() const { return eps.rows(); }
};

// V x R; column r is softmax(m + T g(eps_r)).
using ThetaMatrix = Eigen::MatrixXd;

double log_sum_exp(std::span<const double> v);
double log_sum_exp(const Eigen::Ref<const Vector>& v);

// w = nu + exp(lsd) .* eps
Vector reparam_sample(const Posterior& post, const Eigen::Ref<const Vector>& eps_row);

// sum_i x_i [(m_i + t_i w) - LSE_j(m_j + t_j w)], without the multinomial
// coefficient.
double doc_log_likelihood(const SmmModel& model, const Eigen::Ref<const Vector>& w,
                          const BowDocument& doc);

// KL(q || N(0, I/lambda)) for a diagonal Gaussian q.
double kl_to_prior(const Posterior& post, double lambda);

ThetaMatrix theta_matrix(const SmmModel& model, const Posterior& post,
                         const EpsilonSamples& eps);

// Monte-Carlo ELBO of one document with the given draws.
double elbo_document(const SmmModel& model, const Posterior& post, const BowDocument& doc,
                     const EpsilonSamples& eps);

Vector grad_nu(const SmmModel& model, const Posterior& post, const BowDocument& doc,
               const EpsilonSamples& eps);
Vector grad_lsd(const SmmModel& model, const Posterior& post, const BowDocument& doc,
                const EpsilonSamples& eps);

// Everything the trainer needs from one document, sharing a single theta
// evaluation.
struct DocumentTerms {
  double elbo = 0.0;
  double kl = 0.0;
  Vector grad_nu;
  Vector grad_lsd;
};

// When `t_grad` is non-null the document's contribution to the smooth part of
// the T gradient is added to it.
DocumentTerms document_terms(const SmmModel& model, const Posterior& post,
                             const BowDocument& doc, const EpsilonSamples& eps,
                             RowMatrix* t_grad = nullptr);

// Adds only the T-gradient contribution of one document to `t_grad`.
void accumulate_grad_T(const SmmModel& model, const Posterior& post, const BowDocument& doc,
                       const EpsilonSamples& eps, RowMatrix& t_grad);

// Elementwise sign with sign(0) = 0.
RowMatrix sign(const RowMatrix& t);

// Gradient of sum_d L(q_d) - omega * sum_i |t_i|_1 with respect to T,
// accumulated over documents in index order.
RowMatrix grad_T(const SmmModel& model, std::span<const Posterior> posteriors,
                 const BowCorpus& corpus, std::span<const EpsilonSamples> eps_per_doc,
                 double omega);

// sum_d L(q_d) - omega * |T|_1
double objective(const SmmModel& model, std::span<const Posterior> posteriors,
                 const BowCorpus& corpus, std::span<const EpsilonSamples> eps_per_doc,
                 double omega);

}  // namespace bsmm
