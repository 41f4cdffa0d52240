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

#include "bsmm/classify.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "bsmm/error.hpp"

namespace bsmm {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::LLT<Eigen::MatrixXd> cholesky(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// log N(x | mean, C) given the Cholesky factor of C.
double log_normal(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mean,
                  const Eigen::LLT<Eigen::MatrixXd>& cov_llt, double cov_log_det) {
  const Vector z = cov_llt.matrixL().solve(x - mean);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + cov_log_det + z.squaredNorm());
}

Vector class_log_priors(std::span<const std::size_t> labels, std::size_t num_classes,
                        bool uniform) {
  Vector p = Vector::Zero(static_cast<Eigen::Index>(num_classes));
  if (uniform) return Vector::Constant(p.size(), -std::log(static_cast<double>(num_classes)));
  for (auto l : labels) p[static_cast<Eigen::Index>(l)] += 1.0;
  return (p / static_cast<double>(labels.size())).array().log().matrix();
}

std::vector<std::size_t> class_counts(std::span<const std::size_t> labels,
                                      std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto l : labels) {
    if (l >= num_classes)
      throw DataError("label " + std::to_string(l) + " outside 0.." +
                      std::to_string(num_classes - 1));
    ++counts[l];
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    if (counts[c] == 0) throw DataError("class " + std::to_string(c) + " has no examples");
  return counts;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& a, const char* what) {
  const auto llt = cholesky(a, what);
  return symmetrize(llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
}

}  // namespace

Eigen::MatrixXd GaussianLinearModel::covariance() const {
  return inverse_spd(precision, "classifier precision");
}

void GaussianLinearModel::validate() const {
  const auto k = means.rows();
  if (k == 0 || means.cols() == 0) throw DataError("classifier has no classes or dimension 0");
  if (precision.rows() != k || precision.cols() != k)
    throw DataError("classifier precision must be K x K");
  if (log_priors.size() != means.cols())
    throw DataError("classifier needs one prior per class");
  if (!means.allFinite() || !precision.allFinite() || log_priors.hasNaN())
    throw DataError("classifier has non-finite parameters");
  if (!precision.isApprox(precision.transpose(), 1e-10))
    throw DataError("classifier precision is not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(precision).info() != Eigen::Success)
    throw DataError("classifier precision is not positive definite");
  if (std::abs(log_priors.array().exp().sum() - 1.0) > 1e-9)
    throw DataError("classifier priors do not sum to one");
}

GlcModel glc_train(std::span<const Vector> embeddings, std::span<const std::size_t> labels,
                   std::size_t num_classes, const ClassifierOptions& opts) {
  if (embeddings.size() != labels.size())
    throw DataError("embeddings and labels are not aligned");
  if (embeddings.empty()) throw DataError("no training examples");
  if (opts.gamma < 0.0) throw UsageError("regularizer gamma must be >= 0");
  const auto counts = class_counts(labels, num_classes);
  const auto k = embeddings.front().size();

  GlcModel model;
  model.means = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(num_classes));
  for (std::size_t d = 0; d < embeddings.size(); ++d) {
    if (embeddings[d].size() != k) throw DataError("embeddings have inconsistent dimension");
    model.means.col(static_cast<Eigen::Index>(labels[d])) += embeddings[d];
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    model.means.col(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t d = 0; d < embeddings.size(); ++d) {
    const Vector r = embeddings[d] - model.means.col(static_cast<Eigen::Index>(labels[d]));
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(r);
  }
  Eigen::MatrixXd cov = scatter.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(embeddings.size());
  cov.diagonal().array() += opts.gamma;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(max_ev, 1.0)))
    throw NumericalError(
        "pooled within-class covariance is singular; enable regularization (gamma > 0)");

  model.precision = inverse_spd(cov, "pooled within-class covariance");
  model.log_priors = class_log_priors(labels, num_classes, opts.uniform_priors);
  return model;
}

LatentPosterior glcu_e_step(const GlcuModel& model, const Eigen::Ref<const Vector>& nu_d,
                            const Eigen::Ref<const Vector>& gamma_d,
                            const Eigen::Ref<const Vector>& mu_d) {
  const auto k = model.precision.rows();
  if (nu_d.size() != k || gamma_d.size() != k || mu_d.size() != k)
    throw DataError("E-step inputs must have dimension " + std::to_string(k));
  if (!(gamma_d.array() > 0.0).all() || !gamma_d.allFinite())
    throw NumericalError("embedding precision must be positive and finite");
  LatentPosterior out;
  out.V_prec = model.precision;
  out.V_prec.diagonal() += gamma_d;
  const auto llt = cholesky(out.V_prec, "latent posterior precision D + Gamma");
  // [I + D^-1 Gamma]^-1 (nu - mu) = (D + Gamma)^-1 D (nu - mu)
  out.u = llt.solve(model.precision * (nu_d - mu_d));
  out.V_cov = symmetrize(llt.solve(Eigen::MatrixXd::Identity(k, k)));
  return out;
}

GlcuModel glcu_m_step(std::span<const Vector> nus, std::span<const LatentPosterior> latents,
                      std::span<const std::size_t> labels, std::size_t num_classes,
                      const ClassifierOptions& opts) {
  if (nus.size() != labels.size() || latents.size() != labels.size())
    throw DataError("M-step inputs are not aligned");
  if (nus.empty()) throw DataError("no training examples");
  const auto counts = class_counts(labels, num_classes);
  const auto k = nus.front().size();

  GlcuModel model;
  model.means = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(num_classes));
  for (std::size_t d = 0; d < nus.size(); ++d)
    model.means.col(static_cast<Eigen::Index>(labels[d])) += nus[d] - latents[d].u;
  for (std::size_t c = 0; c < num_classes; ++c)
    model.means.col(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t d = 0; d < nus.size(); ++d) {
    const Vector a =
        latents[d].u - (nus[d] - model.means.col(static_cast<Eigen::Index>(labels[d])));
    cov.noalias() += a * a.transpose();
    cov += latents[d].V_cov;
  }
  cov /= static_cast<double>(nus.size());
  model.precision = inverse_spd(symmetrize(cov), "GLCU within-class covariance");
  model.log_priors = class_log_priors(labels, num_classes, opts.uniform_priors);
  return model;
}

double glcu_log_likelihood(const GlcuModel& model, std::span<const Vector> nus,
                           std::span<const Vector> gammas, std::span<const std::size_t> labels) {
  const Eigen::MatrixXd d_cov = model.covariance();
  double total = 0.0;
  for (std::size_t d = 0; d < nus.size(); ++d) {
    Eigen::MatrixXd c = d_cov;
    c.diagonal() += gammas[d].cwiseInverse();
    const auto llt = cholesky(c, "GLCU marginal covariance");
    total += log_normal(nus[d], model.means.col(static_cast<Eigen::Index>(labels[d])), llt,
                        log_det(llt));
  }
  return total;
}

GlcuTrainResult glcu_train(std::span<const Posterior> posteriors,
                           std::span<const std::size_t> labels, std::size_t num_classes,
                           std::size_t em_iters, const ClassifierOptions& opts,
                           double monotonic_tol) {
  if (em_iters == 0) throw UsageError("GLCU needs at least one EM iteration");
  if (posteriors.size() != labels.size())
    throw DataError("posteriors and labels are not aligned");
  std::vector<Vector> nus, gammas;
  nus.reserve(posteriors.size());
  gammas.reserve(posteriors.size());
  for (const auto& p : posteriors) {
    nus.push_back(p.nu);
    gammas.push_back(p.precision());
  }

  GlcuTrainResult result;
  result.model = glc_train(nus, labels, num_classes, opts);
  result.log_likelihood.push_back(glcu_log_likelihood(result.model, nus, gammas, labels));

  std::vector<LatentPosterior> latents(nus.size());
  for (std::size_t iter = 1; iter <= em_iters; ++iter) {
    for (std::size_t d = 0; d < nus.size(); ++d)
      latents[d] = glcu_e_step(result.model, nus[d], gammas[d],
                               result.model.means.col(static_cast<Eigen::Index>(labels[d])));
    result.model = glcu_m_step(nus, latents, labels, num_classes, opts);
    const double ll = glcu_log_likelihood(result.model, nus, gammas, labels);
    if (ll < result.log_likelihood.back() - monotonic_tol)
      throw NumericalError("GLCU EM log-likelihood decreased from " +
                           std::to_string(result.log_likelihood.back()) + " to " +
                           std::to_string(ll) + " at iteration " + std::to_string(iter));
    result.log_likelihood.push_back(ll);
  }
  return result;
}

Prediction posterior_from_log_scores(const Eigen::Ref<const Vector>& log_scores) {
  Prediction p;
  const double lse = log_sum_exp(log_scores);
  p.posterior = (log_scores.array() - lse).exp().matrix();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < log_scores.size(); ++i)
    if (log_scores[i] > log_scores[best]) best = i;
  p.label = static_cast<std::size_t>(best);
  return p;
}

Prediction predict(const GaussianLinearModel& model, const Eigen::Ref<const Vector>& nu,
                   const std::optional<Vector>& gamma) {
  const auto k = model.precision.rows();
  if (nu.size() != k) throw DataError("embedding dimension does not match classifier");
  Eigen::MatrixXd c = model.covariance();
  if (gamma) {
    if (gamma->size() != k || !(gamma->array() > 0.0).all())
      throw DataError("embedding precision must be positive with classifier dimension");
    c.diagonal() += gamma->cwiseInverse();
  }
  const auto llt = cholesky(c, "class-conditional covariance");
  const double ld = log_det(llt);
  Vector scores(model.means.cols());
  for (Eigen::Index l = 0; l < scores.size(); ++l)
    scores[l] = log_normal(nu, model.means.col(l), llt, ld) + model.log_priors[l];
  return posterior_from_log_scores(scores);
}

}  // namespace bsmm
