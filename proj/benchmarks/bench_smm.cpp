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

#include <benchmark/benchmark.h>

#include <random>

#include "bsmm/classify.hpp"
#include "bsmm/optim.hpp"
#include "bsmm/random.hpp"
#include "bsmm/synthetic.hpp"
#include "bsmm/trainer.hpp"

namespace {

using namespace bsmm;

SyntheticCorpus corpus(std::size_t v, std::size_t k, std::size_t docs, std::size_t len) {
  SyntheticConfig sc;
  sc.V = v;
  sc.K = k;
  sc.seed = 3;
  return sample_corpus(make_synthetic_model(sc), docs, len, len);
}

// One document: ELBO, posterior gradients and its T-gradient contribution.
void BM_DocumentTerms(benchmark::State& state) {
  const auto v = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto data = corpus(v, k, 1, 200);
  TrainConfig cfg;
  cfg.K = k;
  const SmmModel model = init_model(data.corpus, cfg);
  const Posterior post = init_posteriors(1, cfg).front();
  const EpsilonSamples eps = training_eps(cfg, 0, 0, k);
  RowMatrix grad = RowMatrix::Zero(model.T.rows(), model.T.cols());
  for (auto _ : state) {
    auto terms = document_terms(model, post, data.corpus.docs[0], eps, &grad);
    benchmark::DoNotOptimize(terms.elbo);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DocumentTerms)->Args({500, 8})->Args({2000, 50})->Args({5000, 100});

// Full training iterations over a corpus.
void BM_TrainIteration(benchmark::State& state) {
  const auto docs = static_cast<std::size_t>(state.range(0));
  const auto threads = static_cast<std::size_t>(state.range(1));
  const auto data = corpus(500, 8, docs, 200);
  TrainConfig cfg;
  cfg.K = 8;
  cfg.max_iters = 1;
  cfg.tolerance = 0.0;
  cfg.threads = threads;
  cfg.deterministic = true;
  for (auto _ : state) {
    auto st = train(data.corpus, cfg);
    benchmark::DoNotOptimize(st.elbo_trace.back());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(docs));
}
BENCHMARK(BM_TrainIteration)->Args({500, 1})->Args({2000, 1})->Args({2000, 4})->Unit(benchmark::kMillisecond);

void BM_UpdateTRows(benchmark::State& state) {
  const auto v = state.range(0);
  const auto k = state.range(1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  RowMatrix t(v, k), g(v, k);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    t.data()[i] = n01(rng);
    g.data()[i] = n01(rng);
  }
  AdamState s(static_cast<std::size_t>(t.size()), AdamConfig{0.9, 0.999, 1e-8, 0.1});
  for (auto _ : state) {
    update_T_rows(t, g, s, 1.0);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_UpdateTRows)->Args({2000, 50})->Args({5000, 100});

void BM_GlcuEStep(benchmark::State& state) {
  const auto k = state.range(0);
  GlcuModel m;
  m.means = Eigen::MatrixXd::Zero(k, 1);
  m.precision = Eigen::MatrixXd::Identity(k, k) * 2.0;
  m.log_priors = Vector::Zero(1);
  const Vector nu = Vector::Constant(k, 0.3), gamma = Vector::Constant(k, 5.0), mu = Vector::Zero(k);
  for (auto _ : state) {
    auto p = glcu_e_step(m, nu, gamma, mu);
    benchmark::DoNotOptimize(p.u.data());
  }
}
BENCHMARK(BM_GlcuEStep)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
