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

// Acceptance suite: one PASS/FAIL line per check.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "bsmm/classify.hpp"
#include "bsmm/eval.hpp"
#include "bsmm/persist.hpp"
#include "bsmm/synthetic.hpp"
#include "bsmm/trainer.hpp"
#include "cli.hpp"
#include "test_support.hpp"

using namespace bsmm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Gradients of the ELBO and of the full objective against central differences.
Outcome gradient_check() {
  constexpr double rtol = 1e-5, atol = 1e-8;
  std::mt19937_64 rng(20260101);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t v = 2 + rng() % 19, k = 1 + rng() % 5, r = (trial % 2) ? 4 : 1;
    auto in = testing::random_instance(rng, v, k, r);
    const auto terms = document_terms(in.model, in.post, in.doc, in.eps);
    const auto fd_nu = testing::central_difference(
        [&](const Vector& nu) {
          return elbo_document(in.model, Posterior{nu, in.post.lsd}, in.doc, in.eps);
        },
        in.post.nu);
    const auto fd_lsd = testing::central_difference(
        [&](const Vector& lsd) {
          return elbo_document(in.model, Posterior{in.post.nu, lsd}, in.doc, in.eps);
        },
        in.post.lsd);
    worst = std::max(worst, testing::close_ratio(terms.grad_nu, fd_nu, rtol, atol));
    worst = std::max(worst, testing::close_ratio(terms.grad_lsd, fd_lsd, rtol, atol));

    BowCorpus corpus{v, {in.doc}};
    std::vector<Posterior> posts{in.post};
    std::vector<EpsilonSamples> eps{in.eps};
    auto extra = testing::random_instance(rng, v, k, r);
    corpus.docs.push_back(extra.doc);
    posts.push_back(extra.post);
    eps.push_back(extra.eps);
    const double omega = 0.25;
    const RowMatrix g = grad_T(in.model, posts, corpus, eps, omega);
    const Vector flat = Eigen::Map<const Vector>(in.model.T.data(), in.model.T.size());
    const auto fd_t = testing::central_difference(
        [&](const Vector& t) {
          SmmModel m2 = in.model;
          m2.T = Eigen::Map<const RowMatrix>(t.data(), in.model.T.rows(), in.model.T.cols());
          return objective(m2, posts, corpus, eps, omega);
        },
        flat);
    worst = std::max(worst, testing::close_ratio(Eigen::Map<const Vector>(g.data(), g.size()),
                                                 fd_t, rtol, atol));
  }
  return {worst <= 1.0, "200 instances, worst |analytic-fd|/(atol+rtol|fd|) = " + num(worst)};
}

Outcome kl_check() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> lam(0.1, 10.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng() % 20);
    Posterior p{Vector(k), Vector(k)};
    for (Eigen::Index i = 0; i < k; ++i) {
      p.nu[i] = 2.0 * n01(rng);
      p.lsd[i] = 0.8 * n01(rng);
    }
    const double lambda = lam(rng);
    worst = std::max(worst, std::abs(kl_to_prior(p, lambda) -
                                     testing::generic_diag_kl(p.nu, p.variance(), 1.0 / lambda)));
  }
  return {worst <= 1e-10, "100 instances, max abs difference " + num(worst)};
}

testing::EmbeddingData heteroscedastic(std::uint64_t seed, std::size_t docs, Eigen::MatrixXd* means_out = nullptr,
                                       Eigen::MatrixXd* cov_out = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd means(10, 3);
  for (Eigen::Index i = 0; i < means.size(); ++i) means.data()[i] = n01(rng);
  const Eigen::MatrixXd cov = testing::random_spd(rng, 10, 0.3);
  if (means_out) *means_out = means;
  if (cov_out) *cov_out = cov;
  return testing::heteroscedastic_embeddings(rng, means, cov, docs, 0.01, 5.0);
}

Outcome em_monotone_check() {
  const auto data = heteroscedastic(3, 600);
  const auto r = glcu_train(data.posteriors, data.labels, 3, 50, {}, 1e300);
  double worst = 0.0;
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
    worst = std::max(worst, r.log_likelihood[i - 1] - r.log_likelihood[i]);
  return {worst <= 1e-9 && r.log_likelihood.size() == 51,
          "50 iterations, largest decrease " + num(worst) + ", log-likelihood " +
              num(r.log_likelihood.front()) + " -> " + num(r.log_likelihood.back())};
}

Outcome glc_limit_check() {
  auto data = heteroscedastic(4, 600);
  for (auto& p : data.posteriors) p.lsd.setConstant(-0.5 * std::log(1e8));
  const auto glcu = glcu_train(data.posteriors, data.labels, 3, 20).model;
  std::vector<Vector> nus;
  for (const auto& p : data.posteriors) nus.push_back(p.nu);
  const auto glc = glc_train(nus, data.labels, 3);
  const double diff = (glcu.means - glc.means).cwiseAbs().maxCoeff();
  return {diff <= 1e-4, "max |mu_glcu - mu_glc| = " + num(diff)};
}

// Shared synthetic setting for recovery and uncertainty.
struct Recovery {
  SyntheticModel truth;
  TrainedState state;
  TrainConfig cfg;
};

const Recovery& recovery() {
  static const Recovery r = [] {
    SyntheticConfig sc;
    sc.V = 500;
    sc.K = 8;
    sc.lambda = 1.0;
    sc.seed = 500;
    Recovery out;
    out.truth = make_synthetic_model(sc);
    const auto train_set = sample_corpus(out.truth, 2000, 200, 200, 0);
    out.cfg.K = 8;
    out.cfg.omega = 1e-3;
    out.cfg.lambda = 1.0;
    out.cfg.max_iters = 300;
    out.cfg.tolerance = 0.0;
    out.cfg.seed = 1;
    out.cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    out.cfg.deterministic = true;
    out.state = train(train_set.corpus, out.cfg);
    return out;
  }();
  return r;
}

Outcome recovery_check() {
  const Recovery& r = recovery();
  const auto test_set = sample_corpus(r.truth, 500, 200, 200, 1'000'000);
  const double ppl = perplexity(r.state.model, test_set.corpus, r.cfg).ppl_corpus;
  const double uni = unigram_perplexity(r.state.model.m, test_set.corpus).ppl_corpus;
  const auto& tr = r.state.elbo_trace;
  const bool rising = tr.back() > tr.front();
  return {ppl <= 0.8 * uni && rising && tr.size() == 300,
          "held-out PPL " + num(ppl) + " vs unigram " + num(uni) + " (ratio " + num(ppl / uni) +
              "), objective " + num(tr.front()) + " -> " + num(tr.back())};
}

std::vector<Vector> posteriors_of(const GaussianLinearModel& m, const testing::EmbeddingData& d,
                                  bool with_uncertainty) {
  std::vector<Vector> out;
  for (const auto& p : d.posteriors)
    out.push_back(with_uncertainty ? predict(m, p.nu, p.precision()).posterior
                                   : predict(m, p.nu).posterior);
  return out;
}

Outcome cross_entropy_check() {
  Eigen::MatrixXd means, cov;
  const auto train_set = heteroscedastic(5, 1500, &means, &cov);
  std::mt19937_64 rng(6);
  const auto test_set = testing::heteroscedastic_embeddings(rng, means, cov, 1500, 0.01, 5.0);
  std::vector<Vector> nus;
  for (const auto& p : train_set.posteriors) nus.push_back(p.nu);
  const auto glc = glc_train(nus, train_set.labels, 3);
  const auto glcu = glcu_train(train_set.posteriors, train_set.labels, 3, 50).model;
  const auto a = classification_report(posteriors_of(glc, test_set, false), test_set.labels, 3);
  const auto b = classification_report(posteriors_of(glcu, test_set, true), test_set.labels, 3);
  return {b.cross_entropy < a.cross_entropy,
          "CE glcu " + num(b.cross_entropy) + " < glc " + num(a.cross_entropy) + " (accuracy " +
              num(b.accuracy) + " / " + num(a.accuracy) + ")"};
}

BowCorpus sparsity_corpus() {
  SyntheticConfig sc;
  sc.V = 200;
  sc.K = 5;
  sc.seed = 88;
  return sample_corpus(make_synthetic_model(sc), 400, 50, 150).corpus;
}

TrainConfig sparsity_config(double omega, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.K = 5;
  cfg.omega = omega;
  cfg.max_iters = 150;
  cfg.seed = seed;
  cfg.deterministic = true;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  return cfg;
}

Outcome sparsity_check() {
  const BowCorpus corpus = sparsity_corpus();
  const RowMatrix dense = train(corpus, sparsity_config(1e-4, 3)).model.T;
  const RowMatrix sparse = train(corpus, sparsity_config(1.0, 3)).model.T;
  const auto zeros_dense = (dense.array() == 0.0).count();
  const auto zeros_sparse = (sparse.array() == 0.0).count();
  bool bit_exact = true;
  for (Eigen::Index i = 0; i < sparse.size(); ++i)
    if (sparse.data()[i] == 0.0 && std::bit_cast<std::uint64_t>(sparse.data()[i]) != 0)
      bit_exact = false;
  return {zeros_sparse > zeros_dense && bit_exact,
          "exact zeros " + std::to_string(zeros_sparse) + " (omega=1) vs " +
              std::to_string(zeros_dense) + " (omega=1e-4) of " + std::to_string(sparse.size()) +
              ", zeros are +0.0: " + (bit_exact ? "yes" : "no")};
}

Outcome sparsity_trend_check() {
  const BowCorpus corpus = sparsity_corpus();
  const double omegas[] = {1e-4, 1e-2, 1.0, 10.0};
  std::vector<double> mean(4, 0.0);
  constexpr int seeds = 3;
  for (int s = 0; s < seeds; ++s)
    for (int i = 0; i < 4; ++i)
      mean[i] += nonzero_fraction(train(corpus, sparsity_config(omegas[i], 100 + s)).model.T) / seeds;
  bool ok = true;
  for (int i = 1; i < 4; ++i) ok = ok && mean[i] <= mean[i - 1];
  return {ok, "mean nonzero fraction over " + std::to_string(seeds) + " seeds for omega {1e-4, 1e-2, 1, 10}: " +
                  num(mean[0]) + ", " + num(mean[1]) + ", " + num(mean[2]) + ", " + num(mean[3])};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism_check() {
  testing::TempDir tmp("acceptance");
  SyntheticConfig sc;
  sc.V = 150;
  sc.K = 4;
  sc.seed = 9;
  write_bow(tmp / "train.bow", sample_corpus(make_synthetic_model(sc), 300, 30, 120).corpus);
  const std::string threads[] = {"1", "3"};
  for (int run = 0; run < 2; ++run) {
    std::ostringstream out, err;
    const int code = cli::run({"train", "--bow", (tmp / "train.bow").string(), "--k", "4",
                               "--iters", "40", "--seed", "21", "--deterministic", "--threads",
                               threads[run], "--out", (tmp / ("run" + std::to_string(run))).string()},
                              out, err);
    if (code != 0) return {false, "train exited with " + std::to_string(code) + ": " + err.str()};
  }
  const char* files[] = {"meta.txt", "m.f64", "T.f64", "vocab.txt", "posteriors/meta.txt",
                         "posteriors/docs.txt", "posteriors/nu.f64", "posteriors/lsd.f64"};
  std::size_t bytes = 0;
  for (const char* f : files) {
    const std::string a = slurp(tmp / "run0" / f), b = slurp(tmp / "run1" / f);
    if (a != b) return {false, std::string("archives differ in ") + f};
    bytes += a.size();
  }
  return {true, "8 archive files byte-identical (" + std::to_string(bytes) +
                    " bytes), 1 vs 3 threads"};
}

Outcome uncertainty_check() {
  const Recovery& r = recovery();
  const auto docs = sample_corpus(r.truth, 600, 10, 1000, 2'000'000);
  const auto posts = infer_posteriors(r.state.model, docs.corpus, r.cfg);
  const auto rows = uncertainty_summary(posts, docs.corpus);
  std::vector<double> n, tr;
  for (const auto& row : rows) {
    n.push_back(static_cast<double>(row.length));
    tr.push_back(row.trace);
  }
  const double rho = spearman(n, tr);
  return {rho < 0.0, "Spearman(N_d, trace) = " + num(rho) + " over 600 documents"};
}

}  // namespace

int main() {
  report("gradient correctness", gradient_check);
  report("KL oracle", kl_check);
  report("GLCU EM monotonicity", em_monotone_check);
  report("GLCU to GLC limit", glc_limit_check);
  report("synthetic recovery", recovery_check);
  report("GLCU cross-entropy below GLC on heteroscedastic data", cross_entropy_check);
  report("sparsity", sparsity_check);
  report("sparsity trend in omega", sparsity_trend_check);
  report("determinism", determinism_check);
  report("uncertainty trend", uncertainty_check);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
