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

// Acceptance on 20Newsgroups (bydate split). Reads the corpus from
// $BSMM_20NEWS_DIR, which must contain 20news-bydate-train/ and
// 20news-bydate-test/. Exits with 77 (reported by ctest as skipped) when the
// variable is unset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "bsmm/classify.hpp"
#include "bsmm/corpus.hpp"
#include "bsmm/error.hpp"
#include "bsmm/eval.hpp"
#include "bsmm/trainer.hpp"

using namespace bsmm;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;

struct Split {
  std::vector<TokenList> docs;
  std::vector<std::string> classes;  // per document
};

Split read_split(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("missing directory '" + root.string() + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  Split s;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    s.docs.push_back(tokenize(text.str()));
    s.classes.push_back(f.parent_path().filename().string());
  }
  return s;
}

BowCorpus to_corpus(const Split& s, const Vocabulary& vocab) {
  BowCorpus c;
  c.vocab_size = vocab.size();
  for (std::size_t d = 0; d < s.docs.size(); ++d)
    c.docs.push_back(vectorize(s.docs[d], vocab, std::to_string(d + 1)));
  return c;
}

TrainConfig config(std::size_t k) {
  TrainConfig cfg;
  cfg.K = k;
  cfg.omega = 1.0;
  cfg.lambda = 1.0;
  cfg.seed = 1;
  cfg.R_eval = 32;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int failures = 0;

void line(bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

void perplexity_check(const Split& train_split, const Split& test_split) {
  const auto start = std::chrono::steady_clock::now();
  const Vocabulary vocab = build_vocab(train_split.docs, 2, 2000);
  const BowCorpus train_set = to_corpus(train_split, vocab);
  const BowCorpus test_set = to_corpus(test_split, vocab);
  const TrainConfig cfg = config(50);
  const TrainedState st = train(train_set, cfg);
  const PplReport rep = perplexity(st.model, test_set, cfg);
  char detail[256];
  std::snprintf(detail, sizeof detail,
                "V=%zu, K=50, %zu iterations, PPL_CORPUS %.1f in [470, 790], PPL_DOC %.1f, %.0fs",
                vocab.size(), st.elbo_trace.size(), rep.ppl_corpus, rep.ppl_doc,
                seconds_since(start));
  line(rep.ppl_corpus >= 470.0 && rep.ppl_corpus <= 790.0, "20News perplexity", detail);
}

void topic_id_check(const Split& train_split, const Split& test_split) {
  const auto start = std::chrono::steady_clock::now();
  const Vocabulary vocab = build_vocab(train_split.docs, 2, 5000);
  const BowCorpus train_set = to_corpus(train_split, vocab);
  const BowCorpus test_set = to_corpus(test_split, vocab);
  const TrainConfig cfg = config(100);
  const TrainedState st = train(train_set, cfg);
  const auto test_posts = infer_posteriors(st.model, test_set, cfg);

  std::vector<std::string> names = train_split.classes;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  auto ids = [&](const Split& s) {
    std::vector<std::size_t> out;
    for (const auto& c : s.classes) {
      const auto it = std::lower_bound(names.begin(), names.end(), c);
      if (it == names.end() || *it != c) throw DataError("test class '" + c + "' not in training");
      out.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    return out;
  };
  const auto y_train = ids(train_split), y_test = ids(test_split);
  std::vector<Vector> nus;
  for (const auto& p : st.posteriors) nus.push_back(p.nu);
  const GlcModel glc = glc_train(nus, y_train, names.size());
  const GlcuModel glcu = glcu_train(st.posteriors, y_train, names.size(), 10).model;
  std::vector<Vector> p_glc, p_glcu;
  for (const auto& p : test_posts) {
    p_glc.push_back(predict(glc, p.nu).posterior);
    p_glcu.push_back(predict(glcu, p.nu, p.precision()).posterior);
  }
  const ClfReport a = classification_report(p_glc, y_test, names.size());
  const ClfReport b = classification_report(p_glcu, y_test, names.size());
  char detail[256];
  std::snprintf(detail, sizeof detail,
                "V=%zu, K=100, accuracy GLC %.2f%% GLCU %.2f%% (>= 70%%), CE GLC %.3f GLCU %.3f, %.0fs",
                vocab.size(), 100.0 * a.accuracy, 100.0 * b.accuracy, a.cross_entropy,
                b.cross_entropy, seconds_since(start));
  line(a.accuracy >= 0.70 && b.accuracy >= 0.70, "20News topic ID", detail);
}

}  // namespace

int main() {
  const char* dir = std::getenv("BSMM_20NEWS_DIR");
  if (!dir || !*dir) {
    std::printf("[SKIP] 20News perplexity: BSMM_20NEWS_DIR not set\n");
    std::printf("[SKIP] 20News topic ID: BSMM_20NEWS_DIR not set\n");
    return kSkip;
  }
  try {
    const Split train_split = read_split(fs::path(dir) / "20news-bydate-train");
    const Split test_split = read_split(fs::path(dir) / "20news-bydate-test");
    perplexity_check(train_split, test_split);
    topic_id_check(train_split, test_split);
  } catch (const std::exception& e) {
    std::printf("[FAIL] 20News: %s\n", e.what());
    return 1;
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
