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

#include "bsmm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "bsmm/error.hpp"
#include "bsmm/random.hpp"

namespace bsmm {

SyntheticModel make_synthetic_model(const SyntheticConfig& cfg) {
  if (cfg.V == 0 || cfg.K == 0) throw UsageError("synthetic model needs V, K >= 1");
  if (!(cfg.lambda > 0.0)) throw UsageError("synthetic lambda must be > 0");
  const auto v = static_cast<Eigen::Index>(cfg.V);
  const auto k = static_cast<Eigen::Index>(cfg.K);
  SyntheticModel out;
  out.seed = cfg.seed;
  out.truth.lambda = cfg.lambda;
  const Vector logits = cfg.m_stddev * normal_matrix(cfg.seed, Stream::kSynthetic, 0, 0, v, 1);
  out.truth.m = logits.array() - log_sum_exp(logits);
  out.truth.T = cfg.t_stddev * normal_matrix(cfg.seed, Stream::kSynthetic, 1, 0, v, k);
  return out;
}

SyntheticCorpus sample_corpus(const SyntheticModel& model, std::size_t num_docs,
                              std::size_t min_len, std::size_t max_len, std::uint64_t first_doc) {
  if (min_len > max_len) throw UsageError("min_len must not exceed max_len");
  const SmmModel& truth = model.truth;
  const auto v = truth.vocab_size();
  const auto k = static_cast<Eigen::Index>(truth.dim());
  SyntheticCorpus out;
  out.corpus.vocab_size = v;
  out.corpus.docs.resize(num_docs);
  out.w.resize(num_docs);
  std::vector<double> cdf(v);
  std::vector<std::uint32_t> counts(v);
  for (std::size_t d = 0; d < num_docs; ++d) {
    const std::uint64_t key = first_doc + d;
    CounterRng rng(model.seed, Stream::kSynthetic, 2, key);
    Vector w(k);
    for (Eigen::Index j = 0; j < k; ++j) w[j] = rng.normal() / std::sqrt(truth.lambda);
    const Vector logits = truth.m + truth.T * w;
    const double lse = log_sum_exp(logits);
    double acc = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      acc += std::exp(logits[static_cast<Eigen::Index>(i)] - lse);
      cdf[i] = acc;
    }
    const std::size_t span = max_len - min_len + 1;
    const std::size_t len = min_len + static_cast<std::size_t>(rng.next_u64() % span);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t n = 0; n < len; ++n) {
      const double u = rng.uniform() * acc;
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto word = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), v - 1);
      ++counts[word];
    }
    auto& doc = out.corpus.docs[d];
    doc.doc_id = std::to_string(key + 1);
    for (std::size_t i = 0; i < v; ++i)
      if (counts[i] > 0) doc.entries.push_back({static_cast<WordId>(i), counts[i]});
    out.w[d] = std::move(w);
  }
  return out;
}

}  // namespace bsmm
