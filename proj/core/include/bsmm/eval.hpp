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

// Perplexity, topic-ID metrics and posterior-uncertainty summaries.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bsmm/corpus.hpp"
#include "bsmm/smm.hpp"
#include "bsmm/trainer.hpp"

namespace bsmm {

struct DocBound {
  std::string doc_id;
  double bound = 0.0;  // L(q_d), a lower bound on log p(x_d)
  std::uint64_t length = 0;
};

struct PplReport {
  double ppl_doc = 0.0;
  double ppl_corpus = 0.0;
  std::vector<DocBound> per_doc;
  std::size_t empty_docs = 0;  // excluded from both averages
};

// PPL_DOC = exp(-mean_d L_d / N_d) and PPL_CORPUS = exp(-sum_d L_d / sum_d N_d)
// over documents with N_d > 0. Throws DataError if every document is empty.
PplReport perplexity_from_bounds(std::vector<DocBound> bounds);

// Evaluates the ELBO of each document with `r_eval` draws seeded by
// (seed, document index), so the result is deterministic.
PplReport perplexity(const SmmModel& model, const BowCorpus& corpus,
                     std::span<const Posterior> posteriors, std::size_t r_eval,
                     std::uint64_t seed, std::size_t threads = 1);

// Infers posteriors with `cfg` and then evaluates with cfg.R_eval draws.
PplReport perplexity(const SmmModel& model, const BowCorpus& corpus, const TrainConfig& cfg);

struct PplScalars {
  double ppl_doc = 0.0;
  double ppl_corpus = 0.0;
};

// Unigram maximum-likelihood distribution estimated on `corpus` itself and
// scored on it; the floor any model's perplexity is compared against.
PplScalars ml_floor_perplexity(const BowCorpus& corpus);

// Perplexity of the fixed unigram model softmax(log_unigram) on `corpus`.
PplScalars unigram_perplexity(const Vector& log_unigram, const BowCorpus& corpus);

struct ClfReport {
  double accuracy = 0.0;
  double cross_entropy = 0.0;  // nats
  Eigen::MatrixXi confusion;   // rows: true class, cols: predicted class
  std::vector<std::size_t> zero_probability_docs;
};

// Argmax ties go to the lowest class id. A zero probability for the true
// class contributes -log(1e-300) and the document is flagged.
ClfReport classification_report(std::span<const Vector> posteriors,
                                std::span<const std::size_t> labels, std::size_t num_classes);

struct UncertaintyRow {
  std::string doc_id;
  std::uint64_t length = 0;
  double trace = 0.0;  // trace of the posterior covariance
};

std::vector<UncertaintyRow> uncertainty_summary(std::span<const Posterior> posteriors,
                                                const BowCorpus& corpus);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

void write_ppl_report(std::ostream& tsv, std::ostream& summary, const PplReport& report);
void write_clf_report(std::ostream& summary, const ClfReport& report,
                      const std::vector<std::string>& class_names);

}  // namespace bsmm
