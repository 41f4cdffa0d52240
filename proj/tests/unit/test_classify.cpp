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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bsmm/classify.hpp"
#include "bsmm/error.hpp"
#include "bsmm/eval.hpp"
#include "test_support.hpp"

using namespace bsmm;
using doctest::Approx;

namespace {

Vector vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

std::vector<Vector> nus_of(const std::vector<Posterior>& ps) {
  std::vector<Vector> out;
  for (const auto& p : ps) out.push_back(p.nu);
  return out;
}

GaussianLinearModel symmetric_model() {
  GaussianLinearModel m;
  m.means = Eigen::MatrixXd(2, 2);
  m.means << -1.0, 1.0, 0.0, 0.0;
  m.precision = Eigen::MatrixXd::Identity(2, 2);
  m.log_priors = Vector::Constant(2, std::log(0.5));
  return m;
}

testing::EmbeddingData em_data(std::uint64_t seed, std::size_t k, std::size_t classes,
                               std::size_t docs) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd means(k, classes);
  for (Eigen::Index i = 0; i < means.size(); ++i) means.data()[i] = 1.5 * n01(rng);
  const Eigen::MatrixXd s = testing::random_spd(rng, k, 0.5);
  return testing::heteroscedastic_embeddings(rng, means, s, docs, 0.01, 5.0);
}

}  // namespace

TEST_CASE("glc_train two regularized singletons") {
  const std::vector<Vector> x{vec({0.0, 0.0}), vec({2.0, 0.0})};
  const std::vector<std::size_t> y{0, 1};
  const GlcModel m = glc_train(x, y, 2, ClassifierOptions{1.0, false});
  CHECK(m.means.col(0).isApprox(x[0]));
  CHECK((m.means.col(1) - x[1]).norm() < 1e-15);
  CHECK((m.covariance() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK((m.precision - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK(m.log_priors[0] == Approx(std::log(0.5)));
}

TEST_CASE("glc_train zero scatter is singular without regularization") {
  const std::vector<Vector> x{vec({1.0, 2.0}), vec({1.0, 2.0}), vec({3.0, 0.0})};
  const std::vector<std::size_t> y{0, 0, 1};
  try {
    glc_train(x, y, 2);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
  }
  CHECK_NOTHROW(glc_train(x, y, 2, ClassifierOptions{0.1, false}));
}

TEST_CASE("glc_train rejects an empty class and bad labels") {
  const std::vector<Vector> x{vec({1.0}), vec({2.0})};
  CHECK_THROWS_AS(glc_train(x, std::vector<std::size_t>{0, 0}, 2), DataError);
  CHECK_THROWS_AS(glc_train(x, std::vector<std::size_t>{0, 5}, 2), DataError);
  CHECK_THROWS_AS(glc_train(x, std::vector<std::size_t>{0}, 1), DataError);
}

TEST_CASE("glc_train is invariant to duplicating the data") {
  const auto data = em_data(1, 3, 3, 60);
  const auto x = nus_of(data.posteriors);
  std::vector<Vector> x2 = x;
  x2.insert(x2.end(), x.begin(), x.end());
  std::vector<std::size_t> y2 = data.labels;
  y2.insert(y2.end(), data.labels.begin(), data.labels.end());
  const GlcModel a = glc_train(x, data.labels, 3);
  const GlcModel b = glc_train(x2, y2, 3);
  CHECK((a.means - b.means).norm() < 1e-12);
  CHECK((a.precision - b.precision).norm() < 1e-10 * a.precision.norm());
  CHECK((a.log_priors - b.log_priors).norm() < 1e-14);
}

TEST_CASE("glc_train priors empirical or uniform") {
  const std::vector<Vector> x{vec({0.0}), vec({1.0}), vec({5.0}), vec({0.5})};
  const std::vector<std::size_t> y{0, 0, 1, 0};
  const GlcModel e = glc_train(x, y, 2);
  CHECK(e.log_priors[0] == Approx(std::log(0.75)));
  CHECK(e.log_priors[1] == Approx(std::log(0.25)));
  const GlcModel u = glc_train(x, y, 2, ClassifierOptions{0.0, true});
  CHECK(u.log_priors[0] == Approx(std::log(0.5)));
  CHECK(u.log_priors[1] == Approx(std::log(0.5)));
}

TEST_CASE("glc_train recovers means of its own model") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n01;
  const std::size_t n = 10000;
  const std::size_t k = 3;
  Eigen::MatrixXd means(k, 2);
  means << 1.0, -2.0, 0.5, 0.0, -1.0, 3.0;
  const Eigen::MatrixXd cov = testing::random_spd(rng, k, 1.0);
  const Eigen::MatrixXd chol = cov.llt().matrixL();
  std::vector<Vector> x;
  std::vector<std::size_t> y;
  for (std::size_t d = 0; d < 2 * n; ++d) {
    Vector z(k);
    for (std::size_t i = 0; i < k; ++i) z[static_cast<Eigen::Index>(i)] = n01(rng);
    x.push_back(means.col(static_cast<Eigen::Index>(d % 2)) + chol * z);
    y.push_back(d % 2);
  }
  const GlcModel m = glc_train(x, y, 2);
  for (Eigen::Index l = 0; l < 2; ++l)
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(k); ++i)
      CHECK(std::abs(m.means(i, l) - means(i, l)) < 3.0 * std::sqrt(cov(i, i) / n));
}

TEST_CASE("glcu_e_step examples") {
  GlcuModel m;
  m.means = Eigen::MatrixXd::Zero(1, 1);
  m.precision = Eigen::MatrixXd::Identity(1, 1);
  m.log_priors = vec({0.0});
  const LatentPosterior p = glcu_e_step(m, vec({2.0}), vec({1.0}), vec({0.0}));
  CHECK(p.u[0] == Approx(1.0).epsilon(1e-15));
  CHECK(p.V_prec(0, 0) == Approx(2.0).epsilon(1e-15));
  CHECK(p.V_cov(0, 0) == Approx(0.5).epsilon(1e-15));

  const LatentPosterior sharp = glcu_e_step(m, vec({2.0}), vec({1e8}), vec({0.0}));
  CHECK(std::abs(sharp.u[0]) <= 1e-6 * 2.0);

  const LatentPosterior zero = glcu_e_step(m, vec({0.3}), vec({4.0}), vec({0.3}));
  CHECK(zero.u[0] == 0.0);

  CHECK_THROWS_AS(glcu_e_step(m, vec({1.0}), vec({-1.0}), vec({0.0})), NumericalError);
}

TEST_CASE("glcu_e_step matches the direct formula with a full precision") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  const std::size_t k = 4;
  GlcuModel m;
  m.means = Eigen::MatrixXd::Zero(k, 1);
  m.precision = testing::random_spd(rng, k, 1.0).inverse();
  m.log_priors = vec({0.0});
  Vector nu(k), mu(k), gamma(k);
  for (std::size_t i = 0; i < k; ++i) {
    nu[static_cast<Eigen::Index>(i)] = n01(rng);
    mu[static_cast<Eigen::Index>(i)] = n01(rng);
    gamma[static_cast<Eigen::Index>(i)] = std::exp(n01(rng));
  }
  const LatentPosterior p = glcu_e_step(m, nu, gamma, mu);
  const Eigen::MatrixXd dinv = m.precision.inverse();
  const Eigen::MatrixXd g = gamma.asDiagonal();
  const Vector u = (Eigen::MatrixXd::Identity(k, k) + dinv * g).inverse() * (nu - mu);
  CHECK((p.u - u).norm() < 1e-12);
  CHECK((p.V_prec - (m.precision + g)).norm() < 1e-12);
  CHECK((p.V_cov * p.V_prec - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-10);
}

TEST_CASE("glcu_m_step two-document hand example") {
  const std::vector<Vector> nus{vec({1.0}), vec({3.0})};
  std::vector<LatentPosterior> lat(2);
  lat[0].u = vec({0.5});
  lat[0].V_cov = Eigen::MatrixXd::Constant(1, 1, 0.25);
  lat[0].V_prec = Eigen::MatrixXd::Constant(1, 1, 4.0);
  lat[1].u = vec({-0.5});
  lat[1].V_cov = Eigen::MatrixXd::Constant(1, 1, 0.5);
  lat[1].V_prec = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const std::vector<std::size_t> y{0, 0};
  const GlcuModel m = glcu_m_step(nus, lat, y, 1);
  CHECK(m.means(0, 0) == Approx(2.0).epsilon(1e-15));
  CHECK(m.covariance()(0, 0) == Approx(2.625).epsilon(1e-14));
}

TEST_CASE("glcu_m_step with a degenerate latent reduces to glc") {
  const auto data = em_data(5, 3, 3, 90);
  const auto x = nus_of(data.posteriors);
  std::vector<LatentPosterior> lat(x.size());
  for (auto& l : lat) {
    l.u = Vector::Zero(3);
    l.V_cov = Eigen::MatrixXd::Zero(3, 3);
    l.V_prec = Eigen::MatrixXd::Identity(3, 3);
  }
  const GlcuModel a = glcu_m_step(x, lat, data.labels, 3);
  const GlcModel b = glc_train(x, data.labels, 3);
  CHECK((a.means - b.means).norm() < 1e-12);
  CHECK((a.covariance() - b.covariance()).norm() < 1e-12);
  CHECK((a.log_priors - b.log_priors).norm() < 1e-14);

  const std::vector<std::size_t> one(x.size(), 0);
  const GlcuModel single = glcu_m_step(x, lat, one, 1);
  Vector mean = Vector::Zero(3);
  for (const auto& v : x) mean += v;
  mean /= static_cast<double>(x.size());
  CHECK((single.means.col(0) - mean).norm() < 1e-12);
}

TEST_CASE("glcu_train rejects zero iterations") {
  const auto data = em_data(2, 2, 2, 20);
  CHECK_THROWS_AS(glcu_train(data.posteriors, data.labels, 2, 0), UsageError);
}

TEST_CASE("glcu_train log-likelihood is non-decreasing") {
  const auto data = em_data(7, 10, 3, 600);
  const GlcuTrainResult r = glcu_train(data.posteriors, data.labels, 3, 50);
  REQUIRE(r.log_likelihood.size() == 51);
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
    CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9);
  CHECK(r.log_likelihood.back() > r.log_likelihood.front());

  std::vector<Vector> gammas;
  for (const auto& p : data.posteriors) gammas.push_back(p.precision());
  const auto x = nus_of(data.posteriors);
  CHECK(glcu_log_likelihood(r.model, x, gammas, data.labels) ==
        Approx(r.log_likelihood.back()).epsilon(1e-12));
}

TEST_CASE("glcu_train with near-infinite precision matches glc") {
  auto data = em_data(9, 4, 3, 150);
  for (auto& p : data.posteriors) p.lsd.setConstant(-0.5 * std::log(1e8));
  const GlcuTrainResult r = glcu_train(data.posteriors, data.labels, 3, 10);
  const GlcModel g = glc_train(nus_of(data.posteriors), data.labels, 3);
  CHECK((r.model.means - g.means).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("predict symmetric instance and own mean") {
  const GaussianLinearModel m = symmetric_model();
  const Prediction mid = predict(m, vec({0.0, 0.7}));
  CHECK(mid.posterior[0] == Approx(0.5).epsilon(1e-15));
  CHECK(mid.posterior[1] == Approx(0.5).epsilon(1e-15));
  CHECK(mid.label == 0);
  CHECK(predict(m, vec({1.0, 0.0})).label == 1);
  CHECK(predict(m, vec({-1.0, 0.0})).label == 0);
  const Prediction u = predict(m, vec({0.0, 0.0}), vec({2.0, 2.0}));
  CHECK(u.posterior[0] == Approx(0.5));
}

TEST_CASE("predict with more uncertainty moves toward the priors") {
  GaussianLinearModel m = symmetric_model();
  m.log_priors = vec({std::log(0.3), std::log(0.7)});
  const Vector nu = vec({-0.8, 0.2});
  const Prediction glc = predict(m, nu);
  const Prediction glcu = predict(m, nu, vec({0.5, 0.5}));
  const Vector prior = m.log_priors.array().exp().matrix();
  CHECK((glcu.posterior - prior).norm() < (glc.posterior - prior).norm());
  CHECK(glcu.posterior.sum() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior_from_log_scores") {
  const Prediction p = posterior_from_log_scores(vec({-1000.0, -1001.0, -1000.0}));
  CHECK(std::abs(p.posterior.sum() - 1.0) < 1e-12);
  CHECK(p.label == 0);
  const Prediction q = posterior_from_log_scores(vec({2.0, 1.0, 2.0}));
  CHECK((p.posterior - q.posterior).norm() < 1e-12);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 50; ++i) {
    Vector s(5);
    for (Eigen::Index j = 0; j < 5; ++j) s[j] = 30.0 * n01(rng);
    const Prediction a = posterior_from_log_scores(s);
    const Prediction b = posterior_from_log_scores((s.array() + 123.4).matrix());
    CHECK(std::abs(a.posterior.sum() - 1.0) < 1e-12);
    CHECK((a.posterior - b.posterior).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.label == b.label);
  }
}

TEST_CASE("glcu has lower cross-entropy than glc on heteroscedastic data") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  const std::size_t k = 10;
  Eigen::MatrixXd means(k, 3);
  for (Eigen::Index i = 0; i < means.size(); ++i) means.data()[i] = n01(rng);
  const Eigen::MatrixXd s = testing::random_spd(rng, k, 0.3);
  const auto train = testing::heteroscedastic_embeddings(rng, means, s, 600, 0.01, 5.0);
  const auto test = testing::heteroscedastic_embeddings(rng, means, s, 600, 0.01, 5.0);
  const GlcModel glc = glc_train(nus_of(train.posteriors), train.labels, 3);
  const GlcuModel glcu = glcu_train(train.posteriors, train.labels, 3, 50).model;
  std::vector<Vector> p_glc, p_glcu;
  for (const auto& p : test.posteriors) {
    p_glc.push_back(predict(glc, p.nu).posterior);
    p_glcu.push_back(predict(glcu, p.nu, p.precision()).posterior);
  }
  const ClfReport a = classification_report(p_glc, test.labels, 3);
  const ClfReport b = classification_report(p_glcu, test.labels, 3);
  CHECK(b.cross_entropy < a.cross_entropy);
}
