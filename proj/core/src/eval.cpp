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

#include "bsmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "bsmm/error.hpp"
#include "bsmm/parallel.hpp"
#include "bsmm/random.hpp"

namespace bsmm {

PplReport perplexity_from_bounds(std::vector<DocBound> bounds) {
  PplReport r;
  double per_word_sum = 0.0, bound_sum = 0.0, words = 0.0;
  std::size_t used = 0;
  for (const auto& b : bounds) {
    if (b.length == 0) {
      ++r.empty_docs;
      continue;
    }
    const auto n = static_cast<double>(b.length);
    per_word_sum += b.bound / n;
    bound_sum += b.bound;
    words += n;
    ++used;
  }
  if (used == 0) throw DataError("perplexity is undefined: every document is empty");
  r.ppl_doc = std::exp(-per_word_sum / static_cast<double>(used));
  r.ppl_corpus = std::exp(-bound_sum / words);
  r.per_doc = std::move(bounds);
  return r;
}

PplReport perplexity(const SmmModel& model, const BowCorpus& corpus,
                     std::span<const Posterior> posteriors, std::size_t r_eval,
                     std::uint64_t seed, std::size_t threads) {
  if (posteriors.size() != corpus.size())
    throw DataError("posteriors and documents are not aligned");
  if (model.vocab_size() != corpus.vocab_size)
    throw DataError("model and corpus vocabulary sizes differ");
  if (r_eval < 1) throw UsageError("R_eval must be >= 1");
  const auto k = static_cast<Eigen::Index>(model.dim());
  std::vector<DocBound> bounds(corpus.size());
  parallel_for(corpus.size(), threads, 16, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t d = b; d < e; ++d) {
      const auto& doc = corpus.docs[d];
      bounds[d].doc_id = doc.doc_id;
      bounds[d].length = doc.length();
      if (bounds[d].length == 0) continue;
      const EpsilonSamples eps{
          normal_matrix(seed, Stream::kEvalEps, d, 0, static_cast<Eigen::Index>(r_eval), k)};
      bounds[d].bound = elbo_document(model, posteriors[d], doc, eps);
    }
  });
  return perplexity_from_bounds(std::move(bounds));
}

PplReport perplexity(const SmmModel& model, const BowCorpus& corpus, const TrainConfig& cfg) {
  const auto posteriors = infer_posteriors(model, corpus, cfg);
  return perplexity(model, corpus, posteriors, cfg.R_eval, cfg.seed, cfg.threads);
}

namespace {

PplScalars score_unigram(const std::vector<double>& log_theta, const BowCorpus& corpus) {
  std::vector<DocBound> bounds;
  bounds.reserve(corpus.size());
  for (const auto& doc : corpus.docs) {
    double ll = 0.0;
    for (const auto& e : doc.entries) ll += e.count * log_theta[e.word];
    bounds.push_back({doc.doc_id, ll, doc.length()});
  }
  const auto r = perplexity_from_bounds(std::move(bounds));
  return {r.ppl_doc, r.ppl_corpus};
}

}  // namespace

PplScalars ml_floor_perplexity(const BowCorpus& corpus) {
  const auto counts = corpus.word_counts();
  const double total = static_cast<double>(corpus.total_words());
  if (total == 0.0) throw DataError("perplexity is undefined: every document is empty");
  std::vector<double> log_theta(counts.size(), -INFINITY);
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) log_theta[i] = std::log(static_cast<double>(counts[i]) / total);
  return score_unigram(log_theta, corpus);
}

PplScalars unigram_perplexity(const Vector& log_unigram, const BowCorpus& corpus) {
  if (static_cast<std::size_t>(log_unigram.size()) != corpus.vocab_size)
    throw DataError("unigram model and corpus vocabulary sizes differ");
  const double lse = log_sum_exp(log_unigram);
  std::vector<double> log_theta(corpus.vocab_size);
  for (std::size_t i = 0; i < log_theta.size(); ++i)
    log_theta[i] = log_unigram[static_cast<Eigen::Index>(i)] - lse;
  return score_unigram(log_theta, corpus);
}

ClfReport classification_report(std::span<const Vector> posteriors,
                                std::span<const std::size_t> labels, std::size_t num_classes) {
  if (posteriors.size() != labels.size())
    throw DataError("predictions and labels are not aligned");
  if (posteriors.empty()) throw DataError("no predictions to evaluate");
  const auto l = static_cast<Eigen::Index>(num_classes);
  ClfReport r;
  r.confusion = Eigen::MatrixXi::Zero(l, l);
  constexpr double kFloor = 1e-300;
  std::size_t correct = 0;
  double ce = 0.0;
  for (std::size_t d = 0; d < posteriors.size(); ++d) {
    const auto& p = posteriors[d];
    if (p.size() != l) throw DataError("prediction has the wrong number of classes");
    if (labels[d] >= num_classes) throw DataError("label outside the class range");
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < l; ++c)
      if (p[c] > p[best]) best = c;
    const auto truth = static_cast<Eigen::Index>(labels[d]);
    ++r.confusion(truth, best);
    if (best == truth) ++correct;
    double pt = p[truth];
    if (!(pt > 0.0)) {
      r.zero_probability_docs.push_back(d);
      pt = kFloor;
    }
    ce -= std::log(std::max(pt, kFloor));
  }
  const auto n = static_cast<double>(posteriors.size());
  r.accuracy = static_cast<double>(correct) / n;
  r.cross_entropy = ce / n;
  return r;
}

std::vector<UncertaintyRow> uncertainty_summary(std::span<const Posterior> posteriors,
                                                const BowCorpus& corpus) {
  if (posteriors.size() != corpus.size())
    throw DataError("posteriors and documents are not aligned");
  std::vector<UncertaintyRow> rows;
  rows.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d)
    rows.push_back({corpus.docs[d].doc_id, corpus.docs[d].length(), posteriors[d].variance().sum()});
  return rows;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DataError("spearman needs two aligned samples of size >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

void write_ppl_report(std::ostream& tsv, std::ostream& summary, const PplReport& report) {
  tsv.precision(17);
  tsv << "doc_id\telbo\tn_words\n";
  for (const auto& b : report.per_doc) tsv << b.doc_id << '\t' << b.bound << '\t' << b.length << '\n';
  summary.precision(10);
  summary << "ppl_doc=" << report.ppl_doc << '\n'
          << "ppl_corpus=" << report.ppl_corpus << '\n'
          << "documents=" << report.per_doc.size() << '\n'
          << "empty_documents=" << report.empty_docs << '\n';
}

void write_clf_report(std::ostream& summary, const ClfReport& report,
                      const std::vector<std::string>& class_names) {
  summary.precision(10);
  summary << "accuracy=" << report.accuracy << '\n'
          << "cross_entropy=" << report.cross_entropy << '\n'
          << "zero_probability_documents=" << report.zero_probability_docs.size() << '\n';
  for (Eigen::Index t = 0; t < report.confusion.rows(); ++t) {
    summary << "confusion." << class_names.at(static_cast<std::size_t>(t)) << '=';
    for (Eigen::Index p = 0; p < report.confusion.cols(); ++p)
      summary << (p ? "," : "") << report.confusion(t, p);
    summary << '\n';
  }
}

}  // namespace bsmm
