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

// Corpora drawn from the generative process itself:
//   w_d ~ N(0, I / lambda),  theta_d = softmax(m + T w_d),  x_d ~ Mult(theta_d; N_d).
// Used by tests, the acceptance suite and the benchmarks.

#include <cstdint>
#include <vector>

#include "bsmm/corpus.hpp"
#include "bsmm/smm.hpp"

namespace bsmm {

struct SyntheticConfig {
  std::size_t V = 100;
  std::size_t K = 4;
  double lambda = 1.0;
  double t_stddev = 0.5;  // entries of the true T
  double m_stddev = 1.0;  // logits of the true background distribution
  std::uint64_t seed = 1;
};

struct SyntheticModel {
  SmmModel truth;
  std::uint64_t seed = 1;
};

SyntheticModel make_synthetic_model(const SyntheticConfig& cfg);

struct SyntheticCorpus {
  BowCorpus corpus;
  std::vector<Vector> w;  // true embeddings
};

// Document lengths are uniform on [min_len, max_len]. Documents are numbered
// from `first_doc` so that disjoint ranges give independent documents.
SyntheticCorpus sample_corpus(const SyntheticModel& model, std::size_t num_docs,
                              std::size_t min_len, std::size_t max_len,
                              std::uint64_t first_doc = 0);

}  // namespace bsmm
