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

// Stochastic variational Bayes training of the subspace multinomial model
// and posterior inference for unseen documents.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bsmm/corpus.hpp"
#include "bsmm/optim.hpp"
#include "bsmm/smm.hpp"

namespace bsmm {

struct TrainConfig {
  std::size_t K = 100;
  double omega = 1.0;   // L1 weight on the rows of T
  double lambda = 1.0;  // prior precision
  std::size_t R_train = 1;
  std::size_t R_eval = 32;
  std::size_t max_iters = 200;
  std::size_t infer_iters = 200;
  std::uint64_t seed = 0;

  AdamConfig posterior_adam{0.9, 0.999, 1e-8, 0.05};
  AdamConfig t_adam{0.9, 0.999, 1e-8, 0.1};

  double t_init_variance = 1e-3;
  double posterior_init_variance = 0.1;
  double unigram_smoothing = 1.0;

  // Stop once |L_t - L_{t-window}| / |L_{t-window}| < tolerance; 0 disables.
  double tolerance = 1e-5;
  std::size_t tolerance_window = 5;

  // Reuse the same draws for a document in every iteration instead of fresh ones.
  bool freeze_eps = false;
  // Ordered reduction of the T gradient, independent of thread count.
  bool deterministic = false;
  std::size_t threads = 1;
  std::size_t trace_every = 1;

  // Throws UsageError on invalid settings.
  void validate() const;
};

struct IterationStats {
  std::size_t iteration = 0;
  double objective = 0.0;  // sum_d L(q_d) - omega |T|_1
  double kl_sum = 0.0;
  double nonzero_fraction = 0.0;
  double seconds = 0.0;
};

struct TrainedState {
  SmmModel model;
  std::vector<Posterior> posteriors;
  std::vector<double> elbo_trace;
  std::vector<IterationStats> stats;
  bool converged = false;
};

SmmModel init_model(const BowCorpus& corpus, const TrainConfig& cfg);
std::vector<Posterior> init_posteriors(std::size_t num_docs, const TrainConfig& cfg);

// Draws for one document: frozen draws ignore the iteration.
EpsilonSamples training_eps(const TrainConfig& cfg, std::size_t doc, std::size_t iteration,
                            std::size_t dim);

// `log`, when given, receives a tab-separated line every `trace_every`
// iterations. Throws NumericalError (naming the iteration) on a non-finite
// objective.
TrainedState train(const BowCorpus& corpus, const TrainConfig& cfg, std::ostream* log = nullptr);

// Same as train() but starting from the given model and posteriors.
TrainedState train_from(const BowCorpus& corpus, const TrainConfig& cfg, SmmModel model,
                        std::vector<Posterior> posteriors, std::ostream* log = nullptr);

void write_log_header(std::ostream& log);
void write_log_line(std::ostream& log, const IterationStats& s);

// Fraction of entries of T that are not exactly zero.
double nonzero_fraction(const RowMatrix& T);

// Runs cfg.infer_iters ADAM updates of (nu, lsd) with T frozen. `doc_key`
// selects the document's draw stream.
Posterior infer_posterior(const SmmModel& model, const BowDocument& doc, const TrainConfig& cfg,
                          std::uint64_t doc_key = 0);
std::vector<Posterior> infer_posteriors(const SmmModel& model, const BowCorpus& corpus,
                                        const TrainConfig& cfg);

}  // namespace bsmm
