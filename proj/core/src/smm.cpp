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

#include "bsmm/smm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bsmm/error.hpp"

namespace bsmm {

void SmmModel::validate() const {
  if (m.size() == 0) throw DataError("model has an empty vocabulary");
  if (T.rows() != m.size())
    throw DataError("model T has " + std::to_string(T.rows()) + " rows but m has " +
                    std::to_string(m.size()) + " entries");
  if (T.cols() == 0) throw DataError("model has embedding dimension 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DataError("model prior precision lambda must be positive");
  if (!m.allFinite()) throw DataError("model m has non-finite entries");
  if (!T.allFinite()) throw DataError("model T has non-finite entries");
}

double log_sum_exp(std::span<const double> v) {
  return log_sum_exp(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

Vector reparam_sample(const Posterior& post, const Eigen::Ref<const Vector>& eps_row) {
  return post.nu + (post.lsd.array().exp() * eps_row.array()).matrix();
}

double doc_log_likelihood(const SmmModel& model, const Eigen::Ref<const Vector>& w,
                          const BowDocument& doc) {
  if (doc.entries.empty()) return 0.0;
  const Vector logits = model.m + model.T * w;
  const double lse = log_sum_exp(logits);
  double ll = 0.0;
  for (const auto& e : doc.entries) ll += e.count * (logits[e.word] - lse);
  return ll;
}

double kl_to_prior(const Posterior& post, double lambda) {
  const auto k = static_cast<double>(post.dim());
  const double trace_cov = (2.0 * post.lsd.array()).exp().sum();
  // log|Gamma| = -2 sum(lsd)
  const double log_det_prec = -2.0 * post.lsd.sum();
  return 0.5 * (lambda * trace_cov + log_det_prec - k * std::log(lambda) +
                lambda * post.nu.squaredNorm() - k);
}

namespace {

// K x R matrix whose columns are the reparametrized samples g(eps_r).
Eigen::MatrixXd sample_matrix(const Posterior& post, const EpsilonSamples& eps) {
  const Vector sd = post.lsd.array().exp();
  Eigen::MatrixXd w = (eps.eps * sd.asDiagonal()).transpose();
  w.colwise() += post.nu;
  return w;
}

// Turns logits into per-column softmax in place; returns the column LSEs.
Vector softmax_columns(Eigen::MatrixXd& logits) {
  Vector lse(logits.cols());
  for (Eigen::Index r = 0; r < logits.cols(); ++r) {
    auto col = logits.col(r);
    const double mx = col.maxCoeff();
    col.array() = (col.array() - mx).exp();
    const double z = col.sum();
    col /= z;
    lse[r] = mx + std::log(z);
  }
  return lse;
}

void check_dims(const SmmModel& model, const Posterior& post, const EpsilonSamples& eps) {
  const auto k = model.T.cols();
  if (post.nu.size() != k || post.lsd.size() != k)
    throw DataError("posterior dimension does not match model dimension " +
                    std::to_string(k));
  if (eps.eps.cols() != k || eps.eps.rows() < 1)
    throw DataError("epsilon samples must be R x K with R >= 1");
}

}  // namespace

ThetaMatrix theta_matrix(const SmmModel& model, const Posterior& post,
                         const EpsilonSamples& eps) {
  check_dims(model, post, eps);
  Eigen::MatrixXd logits = model.T * sample_matrix(post, eps);
  logits.colwise() += model.m;
  softmax_columns(logits);
  return logits;
}

DocumentTerms document_terms(const SmmModel& model, const Posterior& post,
                             const BowDocument& doc, const EpsilonSamples& eps,
                             RowMatrix* t_grad) {
  check_dims(model, post, eps);
  const double lambda = model.lambda;
  DocumentTerms out;
  out.kl = kl_to_prior(post, lambda);
  out.grad_nu = -lambda * post.nu;
  out.grad_lsd = (1.0 - lambda * (2.0 * post.lsd.array()).exp()).matrix();

  const auto n_words = static_cast<double>(doc.length());
  if (n_words == 0.0) {
    out.elbo = -out.kl;
    return out;
  }

  const Eigen::Index r_count = eps.count();
  const Eigen::MatrixXd w = sample_matrix(post, eps);
  Eigen::MatrixXd theta = model.T * w;
  theta.colwise() += model.m;
  const Vector lse = softmax_columns(theta);

  double linear = 0.0;
  Vector x_t = Vector::Zero(model.T.cols());
  for (const auto& e : doc.entries) {
    linear += e.count * (model.m[e.word] + model.T.row(e.word).dot(post.nu));
    x_t += e.count * model.T.row(e.word).transpose();
  }
  out.elbo = -out.kl + linear - n_words * lse.mean();

  const Eigen::MatrixXd t_theta = model.T.transpose() * theta;  // K x R
  const double scale = n_words / static_cast<double>(r_count);
  out.grad_nu += x_t - scale * t_theta.rowwise().sum();
  const Vector sd = post.lsd.array().exp();
  const Vector weighted =
      (t_theta.array() * eps.eps.transpose().array()).rowwise().sum().matrix();
  out.grad_lsd -= scale * (weighted.array() * sd.array()).matrix();

  if (t_grad != nullptr) {
    for (const auto& e : doc.entries) t_grad->row(e.word) += e.count * post.nu.transpose();
    t_grad->noalias() -= scale * theta * w.transpose();
  }
  return out;
}

void accumulate_grad_T(const SmmModel& model, const Posterior& post, const BowDocument& doc,
                       const EpsilonSamples& eps, RowMatrix& t_grad) {
  check_dims(model, post, eps);
  const auto n_words = static_cast<double>(doc.length());
  if (n_words == 0.0) return;
  const Eigen::MatrixXd w = sample_matrix(post, eps);
  Eigen::MatrixXd theta = model.T * w;
  theta.colwise() += model.m;
  softmax_columns(theta);
  for (const auto& e : doc.entries) t_grad.row(e.word) += e.count * post.nu.transpose();
  t_grad.noalias() -= (n_words / static_cast<double>(eps.count())) * theta * w.transpose();
}

double elbo_document(const SmmModel& model, const Posterior& post, const BowDocument& doc,
                     const EpsilonSamples& eps) {
  return document_terms(model, post, doc, eps).elbo;
}

Vector grad_nu(const SmmModel& model, const Posterior& post, const BowDocument& doc,
               const EpsilonSamples& eps) {
  return document_terms(model, post, doc, eps).grad_nu;
}

Vector grad_lsd(const SmmModel& model, const Posterior& post, const BowDocument& doc,
                const EpsilonSamples& eps) {
  return document_terms(model, post, doc, eps).grad_lsd;
}

RowMatrix sign(const RowMatrix& t) {
  return t.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
}

namespace {

void check_alignment(std::size_t posteriors, const BowCorpus& corpus, std::size_t eps) {
  if (posteriors != corpus.size() || eps != corpus.size())
    throw DataError("posteriors, epsilon samples and documents must be index-aligned");
}

}  // namespace

RowMatrix grad_T(const SmmModel& model, std::span<const Posterior> posteriors,
                 const BowCorpus& corpus, std::span<const EpsilonSamples> eps_per_doc,
                 double omega) {
  check_alignment(posteriors.size(), corpus, eps_per_doc.size());
  RowMatrix g = RowMatrix::Zero(model.T.rows(), model.T.cols());
  for (std::size_t d = 0; d < corpus.size(); ++d)
    accumulate_grad_T(model, posteriors[d], corpus.docs[d], eps_per_doc[d], g);
  if (omega != 0.0) g -= omega * sign(model.T);
  return g;
}

double objective(const SmmModel& model, std::span<const Posterior> posteriors,
                 const BowCorpus& corpus, std::span<const EpsilonSamples> eps_per_doc,
                 double omega) {
  check_alignment(posteriors.size(), corpus, eps_per_doc.size());
  double total = 0.0;
  for (std::size_t d = 0; d < corpus.size(); ++d)
    total += elbo_document(model, posteriors[d], corpus.docs[d], eps_per_doc[d]);
  return total - omega * model.T.cwiseAbs().sum();
}

}  // namespace bsmm
