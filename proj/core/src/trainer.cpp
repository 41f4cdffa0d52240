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

#include "bsmm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "bsmm/error.hpp"
#include "bsmm/parallel.hpp"
#include "bsmm/random.hpp"

namespace bsmm {
namespace {

// Documents per reduction block of the T gradient, independent of the thread count.
constexpr std::size_t kBlock = 32;

void apply_posterior_step(Posterior& post, AdamState& state, const DocumentTerms& terms) {
  const auto k = post.nu.size();
  Array grad(2 * k);
  grad << terms.grad_nu.array(), terms.grad_lsd.array();
  const Array d = adam_direction(state, grad);
  post.nu += d.head(k).matrix();
  post.lsd += d.tail(k).matrix();
}

bool finite(const DocumentTerms& t) {
  return std::isfinite(t.elbo) && t.grad_nu.allFinite() && t.grad_lsd.allFinite();
}

}  // namespace

void TrainConfig::validate() const {
  if (K < 1) throw UsageError("K must be >= 1");
  if (R_train < 1) throw UsageError("R_train must be >= 1");
  if (R_eval < 1) throw UsageError("R_eval must be >= 1");
  if (max_iters < 1) throw UsageError("max_iters must be >= 1");
  if (!(omega >= 0.0)) throw UsageError("omega must be >= 0");
  if (!(lambda > 0.0)) throw UsageError("lambda must be > 0");
  if (!(t_init_variance >= 0.0)) throw UsageError("T init variance must be >= 0");
  if (!(posterior_init_variance > 0.0)) throw UsageError("posterior init variance must be > 0");
  if (!(unigram_smoothing >= 0.0)) throw UsageError("unigram smoothing must be >= 0");
  for (const auto* a : {&posterior_adam, &t_adam}) {
    if (!(a->eta > 0.0)) throw UsageError("learning rates must be > 0");
    if (!(a->beta1 >= 0.0 && a->beta1 < 1.0 && a->beta2 >= 0.0 && a->beta2 < 1.0))
      throw UsageError("ADAM betas must lie in [0, 1)");
  }
}

SmmModel init_model(const BowCorpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t v = corpus.vocab_size;
  if (v == 0) throw DataError("cannot initialize a model with an empty vocabulary");
  if (corpus.size() == 0) throw DataError("cannot initialize a model from an empty corpus");
  const auto counts = corpus.word_counts();
  SmmModel model;
  model.lambda = cfg.lambda;
  model.m.resize(static_cast<Eigen::Index>(v));
  double total = 0.0;
  for (std::size_t i = 0; i < v; ++i) total += static_cast<double>(counts[i]) + cfg.unigram_smoothing;
  if (!(total > 0.0)) throw DataError("corpus has no words and smoothing is zero");
  for (std::size_t i = 0; i < v; ++i)
    model.m[static_cast<Eigen::Index>(i)] =
        std::log((static_cast<double>(counts[i]) + cfg.unigram_smoothing) / total);
  model.T = std::sqrt(cfg.t_init_variance) *
            normal_matrix(cfg.seed, Stream::kInitT, 0, 0, static_cast<Eigen::Index>(v),
                          static_cast<Eigen::Index>(cfg.K));
  return model;
}

std::vector<Posterior> init_posteriors(std::size_t num_docs, const TrainConfig& cfg) {
  const auto k = static_cast<Eigen::Index>(cfg.K);
  const Posterior init{Vector::Zero(k),
                       Vector::Constant(k, 0.5 * std::log(cfg.posterior_init_variance))};
  return std::vector<Posterior>(num_docs, init);
}

EpsilonSamples training_eps(const TrainConfig& cfg, std::size_t doc, std::size_t iteration,
                            std::size_t dim) {
  return {normal_matrix(cfg.seed, Stream::kTrainEps, doc, cfg.freeze_eps ? 0 : iteration,
                        static_cast<Eigen::Index>(cfg.R_train), static_cast<Eigen::Index>(dim))};
}

double nonzero_fraction(const RowMatrix& T) {
  if (T.size() == 0) return 0.0;
  return static_cast<double>((T.array() != 0.0).count()) / static_cast<double>(T.size());
}

void write_log_header(std::ostream& log) {
  log << "iter\telbo\tkl_sum\tnonzero_fraction\tseconds\n";
}

void write_log_line(std::ostream& log, const IterationStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.10g\t%.10g\t%.6f\t%.3f\n", s.iteration, s.objective,
                s.kl_sum, s.nonzero_fraction, s.seconds);
  log << buf << std::flush;
}

TrainedState train(const BowCorpus& corpus, const TrainConfig& cfg, std::ostream* log) {
  SmmModel model = init_model(corpus, cfg);
  return train_from(corpus, cfg, std::move(model), init_posteriors(corpus.size(), cfg), log);
}

TrainedState train_from(const BowCorpus& corpus, const TrainConfig& cfg, SmmModel model,
                        std::vector<Posterior> posteriors, std::ostream* log) {
  cfg.validate();
  corpus.validate();
  model.validate();
  if (model.vocab_size() != corpus.vocab_size)
    throw DataError("model vocabulary size " + std::to_string(model.vocab_size()) +
                    " does not match corpus V=" + std::to_string(corpus.vocab_size));
  if (posteriors.size() != corpus.size())
    throw DataError("one posterior per document is required");
  const std::size_t k = model.dim();
  const std::size_t num_docs = corpus.size();
  const std::size_t threads = std::max<std::size_t>(cfg.threads, 1);

  std::vector<AdamState> post_adam(num_docs, AdamState(2 * k, cfg.posterior_adam));
  AdamState t_adam(static_cast<std::size_t>(model.T.size()), cfg.t_adam);

  TrainedState state;
  state.elbo_trace.reserve(cfg.max_iters);
  const auto start = std::chrono::steady_clock::now();
  if (log) write_log_header(*log);

  const std::size_t num_blocks = (num_docs + kBlock - 1) / kBlock;
  std::vector<double> block_elbo(num_blocks), block_kl(num_blocks);
  std::vector<RowMatrix> partial(threads, RowMatrix(model.T.rows(), model.T.cols()));

  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    // Posterior updates; the model is read-only.
    parallel_for(num_docs, threads, kBlock, [&](std::size_t b, std::size_t e, std::size_t) {
      for (std::size_t d = b; d < e; ++d) {
        const auto eps = training_eps(cfg, d, iter, k);
        const auto terms = document_terms(model, posteriors[d], corpus.docs[d], eps);
        if (!finite(terms))
          throw NumericalError("non-finite ELBO or gradient for document " + std::to_string(d) +
                               " at iteration " + std::to_string(iter));
        apply_posterior_step(posteriors[d], post_adam[d], terms);
      }
    });

    // Objective and T gradient at the updated posteriors.
    RowMatrix t_grad = RowMatrix::Zero(model.T.rows(), model.T.cols());
    auto block_pass = [&](std::size_t b, std::size_t e, RowMatrix& acc) {
      double elbo = 0.0, kl = 0.0;
      for (std::size_t d = b; d < e; ++d) {
        const auto eps = training_eps(cfg, d, iter, k);
        const auto terms = document_terms(model, posteriors[d], corpus.docs[d], eps, &acc);
        elbo += terms.elbo;
        kl += terms.kl;
      }
      block_elbo[b / kBlock] = elbo;
      block_kl[b / kBlock] = kl;
    };
    if (cfg.deterministic) {
      // Waves of `threads` blocks, each into its own buffer, summed in block order.
      for (std::size_t wave = 0; wave < num_blocks; wave += threads) {
        const std::size_t wave_blocks = std::min(threads, num_blocks - wave);
        parallel_for(wave_blocks, threads, 1, [&](std::size_t b, std::size_t, std::size_t) {
          RowMatrix& acc = partial[b];
          acc.setZero();
          const std::size_t first = (wave + b) * kBlock;
          block_pass(first, std::min(num_docs, first + kBlock), acc);
        });
        for (std::size_t b = 0; b < wave_blocks; ++b) t_grad += partial[b];
      }
    } else {
      for (auto& p : partial) p.setZero();
      parallel_for(num_docs, threads, kBlock, [&](std::size_t b, std::size_t e, std::size_t w) {
        block_pass(b, e, partial[w]);
      });
      for (const auto& p : partial) t_grad += p;
    }

    double elbo_sum = 0.0, kl_sum = 0.0;
    for (std::size_t b = 0; b < num_blocks; ++b) {
      elbo_sum += block_elbo[b];
      kl_sum += block_kl[b];
    }
    const double objective = elbo_sum - cfg.omega * model.T.cwiseAbs().sum();
    if (!std::isfinite(objective))
      throw NumericalError("non-finite objective at iteration " + std::to_string(iter));
    if (t_grad.hasNaN())
      throw NumericalError("NaN in the T gradient at iteration " + std::to_string(iter));

    update_T_rows(model.T, t_grad, t_adam, cfg.omega);

    IterationStats s;
    s.iteration = iter;
    s.objective = objective;
    s.kl_sum = kl_sum;
    s.nonzero_fraction = nonzero_fraction(model.T);
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    state.elbo_trace.push_back(objective);
    state.stats.push_back(s);
    if (log && cfg.trace_every > 0 && (iter % cfg.trace_every == 0 || iter + 1 == cfg.max_iters))
      write_log_line(*log, s);

    const auto& tr = state.elbo_trace;
    const std::size_t w = cfg.tolerance_window;
    if (cfg.tolerance > 0.0 && w > 0 && tr.size() > w) {
      const double prev = tr[tr.size() - 1 - w];
      if (std::abs(tr.back() - prev) < cfg.tolerance * std::max(std::abs(prev), 1e-300)) {
        state.converged = true;
        if (log && cfg.trace_every > 0 && iter % cfg.trace_every != 0) write_log_line(*log, s);
        break;
      }
    }
  }

  state.model = std::move(model);
  state.posteriors = std::move(posteriors);
  return state;
}

Posterior infer_posterior(const SmmModel& model, const BowDocument& doc, const TrainConfig& cfg,
                          std::uint64_t doc_key) {
  const std::size_t k = model.dim();
  TrainConfig local = cfg;
  local.K = k;
  Posterior post = init_posteriors(1, local).front();
  AdamState adam(2 * k, cfg.posterior_adam);
  for (std::size_t iter = 0; iter < cfg.infer_iters; ++iter) {
    const EpsilonSamples eps{normal_matrix(cfg.seed, Stream::kInferEps, doc_key,
                                           cfg.freeze_eps ? 0 : iter,
                                           static_cast<Eigen::Index>(cfg.R_train),
                                           static_cast<Eigen::Index>(k))};
    const auto terms = document_terms(model, post, doc, eps);
    if (!finite(terms))
      throw NumericalError("non-finite ELBO or gradient while inferring document '" +
                           doc.doc_id + "' at iteration " + std::to_string(iter));
    apply_posterior_step(post, adam, terms);
  }
  return post;
}

std::vector<Posterior> infer_posteriors(const SmmModel& model, const BowCorpus& corpus,
                                        const TrainConfig& cfg) {
  model.validate();
  if (model.vocab_size() != corpus.vocab_size)
    throw DataError("model vocabulary size " + std::to_string(model.vocab_size()) +
                    " does not match corpus V=" + std::to_string(corpus.vocab_size));
  corpus.validate();
  std::vector<Posterior> out(corpus.size());
  parallel_for(corpus.size(), cfg.threads, 8, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t d = b; d < e; ++d) out[d] = infer_posterior(model, corpus.docs[d], cfg, d);
  });
  return out;
}

}  // namespace bsmm
