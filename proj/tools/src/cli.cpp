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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bsmm/classify.hpp"
#include "bsmm/corpus.hpp"
#include "bsmm/error.hpp"
#include "bsmm/eval.hpp"
#include "bsmm/persist.hpp"
#include "bsmm/trainer.hpp"

namespace bsmm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---- document input --------------------------------------------------------

struct RawDoc {
  fs::path path;
  TokenList tokens;
};

std::vector<fs::path> collect_paths(const std::vector<std::string>& inputs,
                                    const std::string& file_list) {
  std::vector<fs::path> paths;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file()) found.push_back(e.path());
      std::sort(found.begin(), found.end());
      paths.insert(paths.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      paths.push_back(p);
    } else {
      throw IoError("input '" + in + "' does not exist");
    }
  }
  if (!file_list.empty()) {
    std::ifstream list(file_list);
    if (!list) throw IoError("cannot open file list '" + file_list + "'");
    std::string line;
    while (std::getline(list, line))
      if (!line.empty()) paths.emplace_back(line);
  }
  if (paths.empty()) throw UsageError("no input documents");
  return paths;
}

std::vector<RawDoc> read_documents(const std::vector<fs::path>& paths) {
  std::vector<RawDoc> docs;
  docs.reserve(paths.size());
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read '" + p.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    docs.push_back({p, tokenize(text.str())});
  }
  return docs;
}

// ---- shared option groups --------------------------------------------------

void add_train_options(CLI::App& app, TrainConfig& cfg) {
  app.add_option("--k", cfg.K, "embedding dimension")->capture_default_str();
  app.add_option("--omega", cfg.omega, "L1 weight on the rows of T")->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "prior precision")->capture_default_str();
  app.add_option("--r-train", cfg.R_train, "draws per document while training")
      ->capture_default_str();
  app.add_option("--r-eval", cfg.R_eval, "draws per document for evaluation")
      ->capture_default_str();
  app.add_option("--iters", cfg.max_iters, "maximum training iterations")->capture_default_str();
  app.add_option("--infer-iters", cfg.infer_iters, "posterior updates for unseen documents")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--eta-posterior", cfg.posterior_adam.eta, "ADAM step for nu and lsd")
      ->capture_default_str();
  app.add_option("--eta-t", cfg.t_adam.eta, "ADAM step for T")->capture_default_str();
  app.add_option("--beta1", cfg.posterior_adam.beta1, "ADAM beta1")->capture_default_str();
  app.add_option("--beta2", cfg.posterior_adam.beta2, "ADAM beta2")->capture_default_str();
  app.add_option("--adam-eps", cfg.posterior_adam.eps_hat, "ADAM epsilon")->capture_default_str();
  app.add_option("--t-init-variance", cfg.t_init_variance, "variance of the initial T")
      ->capture_default_str();
  app.add_option("--posterior-init-variance", cfg.posterior_init_variance,
                 "initial posterior variance")
      ->capture_default_str();
  app.add_option("--unigram-smoothing", cfg.unigram_smoothing, "additive smoothing of m")
      ->capture_default_str();
  app.add_option("--tolerance", cfg.tolerance, "relative objective change to stop; 0 disables")
      ->capture_default_str();
  app.add_option("--tolerance-window", cfg.tolerance_window, "iterations compared for stopping")
      ->capture_default_str();
  app.add_flag("--freeze-eps", cfg.freeze_eps, "reuse the same draws every iteration");
  app.add_flag("--deterministic", cfg.deterministic, "ordered reductions");
  app.add_option("--threads", cfg.threads, "worker threads")->capture_default_str();
  app.add_option("--trace-every", cfg.trace_every, "log every N iterations")
      ->capture_default_str();
}

// The betas and epsilon are shared by both optimizers.
void sync_adam(TrainConfig& cfg) {
  cfg.t_adam.beta1 = cfg.posterior_adam.beta1;
  cfg.t_adam.beta2 = cfg.posterior_adam.beta2;
  cfg.t_adam.eps_hat = cfg.posterior_adam.eps_hat;
}

std::vector<std::string> doc_ids_of(const BowCorpus& corpus) {
  std::vector<std::string> ids;
  ids.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) ids.push_back(d.doc_id);
  return ids;
}

void check_aligned(const PosteriorArchive& posts, const BowCorpus& corpus) {
  if (posts.doc_ids != doc_ids_of(corpus))
    throw DataError("posterior doc ids do not match the documents of the corpus");
}

// ---- classifier file -------------------------------------------------------

struct ClassifierFile {
  std::string type;  // glc or glcu
  std::vector<std::string> classes;
  GaussianLinearModel model;
  std::vector<double> log_likelihood;
};

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw DataError(std::string("classifier field '") + field + "' is not a matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (j[i].size() != static_cast<std::size_t>(cols))
      throw DataError(std::string("classifier field '") + field + "' has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

void write_classifier(const fs::path& path, const ClassifierFile& f) {
  json j;
  j["format_version"] = kFormatVersion;
  j["type"] = f.type;
  j["classes"] = f.classes;
  j["dim"] = f.model.dim();
  j["means"] = matrix_json(f.model.means.transpose());
  j["precision"] = matrix_json(f.model.precision);
  j["log_priors"] = std::vector<double>(f.model.log_priors.data(),
                                        f.model.log_priors.data() + f.model.log_priors.size());
  if (!f.log_likelihood.empty()) j["log_likelihood"] = f.log_likelihood;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ClassifierFile read_classifier(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open classifier '" + path.string() + "'");
  ClassifierFile f;
  try {
    const json j = json::parse(in);
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw DataError("classifier '" + path.string() + "' has an unsupported format_version");
    f.type = j.at("type").get<std::string>();
    if (f.type != "glc" && f.type != "glcu")
      throw DataError("classifier type must be glc or glcu, got '" + f.type + "'");
    f.classes = j.at("classes").get<std::vector<std::string>>();
    f.model.means = matrix_from_json(j.at("means"), "means").transpose();
    f.model.precision = matrix_from_json(j.at("precision"), "precision");
    const auto priors = j.at("log_priors").get<std::vector<double>>();
    f.model.log_priors = Eigen::Map<const Vector>(priors.data(), static_cast<Eigen::Index>(priors.size()));
    if (f.model.dim() != j.at("dim").get<std::size_t>())
      throw DataError("classifier 'dim' does not match its means");
  } catch (const json::exception& e) {
    throw DataError("malformed classifier '" + path.string() + "': " + e.what());
  }
  if (f.classes.size() != f.model.num_classes())
    throw DataError("classifier lists " + std::to_string(f.classes.size()) + " classes but has " +
                    std::to_string(f.model.num_classes()) + " means");
  f.model.validate();
  return f;
}

// ---- predictions file ------------------------------------------------------

struct PredictionTable {
  std::vector<std::string> classes;
  std::vector<std::string> doc_ids;
  std::vector<Vector> posteriors;
};

PredictionTable read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions '" + path.string() + "'");
  PredictionTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string x;
    while (std::getline(ss, x, '\t')) f.push_back(x);
    return f;
  };
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header", 1);
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "doc_id" || header[1] != "predicted")
    throw ParseError(path.string() + ": expected 'doc_id<TAB>predicted<TAB>classes...'", 1);
  t.classes.assign(header.begin() + 2, header.end());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size())
      throw ParseError(path.string() + ": expected " + std::to_string(header.size()) + " fields",
                       lineno);
    Vector p(static_cast<Eigen::Index>(t.classes.size()));
    for (std::size_t c = 0; c < t.classes.size(); ++c) {
      char* end = nullptr;
      p[static_cast<Eigen::Index>(c)] = std::strtod(f[c + 2].c_str(), &end);
      if (end == f[c + 2].c_str() || *end != '\0')
        throw ParseError(path.string() + ": bad probability '" + f[c + 2] + "'", lineno);
    }
    t.doc_ids.push_back(f[0]);
    t.posteriors.push_back(std::move(p));
  }
  return t;
}

// ---- commands --------------------------------------------------------------

struct Context {
  std::ostream& out;
  std::ostream& err;
};

int cmd_build_vocab(const std::vector<std::string>& inputs, const std::string& file_list,
                    std::size_t min_df, std::optional<std::size_t> max_size,
                    const std::string& out_path, Context& ctx) {
  const auto docs = read_documents(collect_paths(inputs, file_list));
  std::vector<TokenList> tokens;
  tokens.reserve(docs.size());
  for (const auto& d : docs) tokens.push_back(d.tokens);
  const Vocabulary vocab = build_vocab(tokens, min_df, max_size);
  StagedPath staged(out_path);
  write_vocab(staged.path(), vocab);
  staged.commit();
  ctx.out << "V=" << vocab.size() << '\n';
  return kExitOk;
}

int cmd_vectorize(const std::vector<std::string>& inputs, const std::string& file_list,
                  const std::string& vocab_path, const std::string& out_path,
                  const std::string& labels_out, const std::string& ids_out, Context& ctx) {
  const Vocabulary vocab = read_vocab(vocab_path);
  const auto docs = read_documents(collect_paths(inputs, file_list));
  BowCorpus corpus;
  corpus.vocab_size = vocab.size();
  std::vector<std::string> ids;
  std::vector<std::string> class_of;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    ids.push_back(std::to_string(d + 1));
    corpus.docs.push_back(vectorize(docs[d].tokens, vocab, ids.back()));
    class_of.push_back(docs[d].path.parent_path().filename().string());
  }
  StagedPath bow(out_path);
  write_bow(bow.path(), corpus);
  std::optional<StagedPath> labels, id_map;
  if (!labels_out.empty()) {
    Labels l;
    l.class_names = class_of;
    std::sort(l.class_names.begin(), l.class_names.end());
    l.class_names.erase(std::unique(l.class_names.begin(), l.class_names.end()), l.class_names.end());
    for (const auto& c : class_of)
      l.ids.push_back(static_cast<std::size_t>(
          std::lower_bound(l.class_names.begin(), l.class_names.end(), c) - l.class_names.begin()));
    labels.emplace(labels_out);
    write_labels(labels->path(), ids, l);
  }
  if (!ids_out.empty()) {
    id_map.emplace(ids_out);
    std::ofstream f(id_map->path());
    for (std::size_t d = 0; d < docs.size(); ++d) f << ids[d] << '\t' << docs[d].path.string() << '\n';
    if (!f) throw IoError("failed writing '" + ids_out + "'");
  }
  bow.commit();
  if (labels) labels->commit();
  if (id_map) id_map->commit();
  std::size_t empty = 0;
  for (const auto& d : corpus.docs) empty += d.entries.empty();
  ctx.out << "D=" << corpus.size() << " V=" << corpus.vocab_size
          << " tokens=" << corpus.total_words() << " empty_documents=" << empty << '\n';
  return kExitOk;
}

int cmd_train(const std::string& bow_path, const std::string& vocab_path, TrainConfig cfg,
              const std::string& out_dir, Context& ctx) {
  sync_adam(cfg);
  cfg.validate();
  const BowCorpus corpus = read_bow(bow_path);
  Vocabulary vocab;
  if (!vocab_path.empty()) {
    vocab = read_vocab(vocab_path);
    if (vocab.size() != corpus.vocab_size)
      throw DataError("vocabulary has " + std::to_string(vocab.size()) + " tokens but the corpus V=" +
                      std::to_string(corpus.vocab_size));
  } else {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < corpus.vocab_size; ++i) tokens.push_back("w" + std::to_string(i + 1));
    vocab = Vocabulary(std::move(tokens));
  }

  StagedPath staged(out_dir);
  fs::create_directories(staged.path());
  std::ofstream log(staged.path() / "train.log");
  if (!log) throw IoError("cannot write the training log");
  const TrainedState st = train(corpus, cfg, &log);
  log.close();

  ModelArchive model{st.model, vocab, cfg.omega, cfg.seed, st.elbo_trace.size()};
  save_model(staged.path(), model);
  save_posteriors(staged.path() / "posteriors", PosteriorArchive{doc_ids_of(corpus), st.posteriors});
  staged.commit();
  ctx.out << "iterations=" << st.elbo_trace.size() << '\n'
          << "converged=" << (st.converged ? "true" : "false") << '\n'
          << "elbo_first=" << fmt17(st.elbo_trace.front()) << '\n'
          << "elbo_last=" << fmt17(st.elbo_trace.back()) << '\n'
          << "nonzero_fraction=" << nonzero_fraction(st.model.T) << '\n';
  return kExitOk;
}

TrainConfig model_config(TrainConfig cfg, const ModelArchive& a) {
  sync_adam(cfg);
  cfg.K = a.model.dim();
  cfg.lambda = a.model.lambda;
  cfg.omega = a.omega;
  cfg.validate();
  return cfg;
}

int cmd_infer(const std::string& model_dir, const std::string& bow_path, TrainConfig cfg,
              const std::string& out_dir, Context& ctx) {
  const ModelArchive a = load_model(model_dir);
  cfg = model_config(cfg, a);
  const BowCorpus corpus = read_bow(bow_path);
  if (corpus.vocab_size != a.model.vocab_size())
    throw DataError("corpus V=" + std::to_string(corpus.vocab_size) + " does not match model V=" +
                    std::to_string(a.model.vocab_size()));
  const auto posteriors = infer_posteriors(a.model, corpus, cfg);
  StagedPath staged(out_dir);
  save_posteriors(staged.path(), PosteriorArchive{doc_ids_of(corpus), posteriors});
  staged.commit();
  ctx.out << "D=" << corpus.size() << '\n';
  return kExitOk;
}

int cmd_classify_train(const std::string& post_dir, const std::string& labels_path,
                       const std::string& type, const std::string& priors, std::size_t em_iters,
                       double reg, const std::string& out_path, Context& ctx) {
  const PosteriorArchive posts = load_posteriors(post_dir);
  const Labels labels = read_labels(labels_path, posts.doc_ids);
  const ClassifierOptions opts{reg, priors == "uniform"};
  ClassifierFile f;
  f.type = type;
  f.classes = labels.class_names;
  if (type == "glc") {
    std::vector<Vector> nus;
    for (const auto& p : posts.posteriors) nus.push_back(p.nu);
    f.model = glc_train(nus, labels.ids, labels.num_classes(), opts);
  } else {
    auto r = glcu_train(posts.posteriors, labels.ids, labels.num_classes(), em_iters, opts);
    f.model = std::move(r.model);
    f.log_likelihood = std::move(r.log_likelihood);
  }
  std::vector<Vector> probs;
  for (const auto& p : posts.posteriors)
    probs.push_back(type == "glc" ? predict(f.model, p.nu).posterior
                                  : predict(f.model, p.nu, p.precision()).posterior);
  const ClfReport rep = classification_report(probs, labels.ids, labels.num_classes());

  StagedPath staged(out_path);
  write_classifier(staged.path(), f);
  staged.commit();
  ctx.out << "type=" << type << '\n'
          << "classes=" << f.classes.size() << '\n'
          << "train_accuracy=" << rep.accuracy << '\n'
          << "train_cross_entropy=" << rep.cross_entropy << '\n';
  if (!f.log_likelihood.empty())
    ctx.out << "log_likelihood_first=" << fmt17(f.log_likelihood.front()) << '\n'
            << "log_likelihood_last=" << fmt17(f.log_likelihood.back()) << '\n';
  return kExitOk;
}

int cmd_classify(const std::string& model_path, const std::string& post_dir,
                 const std::string& labels_path, const std::string& out_path, Context& ctx) {
  const ClassifierFile f = read_classifier(model_path);
  const PosteriorArchive posts = load_posteriors(post_dir);
  for (const auto& p : posts.posteriors)
    if (static_cast<std::size_t>(p.nu.size()) != f.model.dim())
      throw DataError("posterior dimension " + std::to_string(p.nu.size()) +
                      " does not match classifier dimension " + std::to_string(f.model.dim()));
  std::optional<Labels> labels;
  if (!labels_path.empty()) labels = read_labels(labels_path, posts.doc_ids, &f.classes);

  std::vector<Vector> probs;
  StagedPath staged(out_path);
  {
    std::ofstream out(staged.path());
    if (!out) throw IoError("cannot write '" + out_path + "'");
    out << "doc_id\tpredicted";
    for (const auto& c : f.classes) out << '\t' << c;
    out << '\n';
    for (std::size_t d = 0; d < posts.posteriors.size(); ++d) {
      const auto& p = posts.posteriors[d];
      const Prediction pred =
          f.type == "glc" ? predict(f.model, p.nu) : predict(f.model, p.nu, p.precision());
      out << posts.doc_ids[d] << '\t' << f.classes[pred.label];
      for (Eigen::Index c = 0; c < pred.posterior.size(); ++c) out << '\t' << fmt17(pred.posterior[c]);
      out << '\n';
      probs.push_back(pred.posterior);
    }
    if (!out) throw IoError("failed writing '" + out_path + "'");
  }
  staged.commit();
  ctx.out << "documents=" << probs.size() << '\n';
  if (labels) {
    const ClfReport rep = classification_report(probs, labels->ids, f.classes.size());
    write_clf_report(ctx.out, rep, f.classes);
  }
  return kExitOk;
}

int cmd_ppl(const std::string& model_dir, const std::string& bow_path, const std::string& post_dir,
            TrainConfig cfg, const std::string& out_dir, Context& ctx) {
  const ModelArchive a = load_model(model_dir);
  cfg = model_config(cfg, a);
  const BowCorpus corpus = read_bow(bow_path);
  if (corpus.vocab_size != a.model.vocab_size())
    throw DataError("corpus V=" + std::to_string(corpus.vocab_size) + " does not match model V=" +
                    std::to_string(a.model.vocab_size()));
  PplReport rep;
  if (!post_dir.empty()) {
    const PosteriorArchive posts = load_posteriors(post_dir);
    check_aligned(posts, corpus);
    rep = perplexity(a.model, corpus, posts.posteriors, cfg.R_eval, cfg.seed, cfg.threads);
  } else {
    rep = perplexity(a.model, corpus, cfg);
  }
  const PplScalars floor = ml_floor_perplexity(corpus);
  const PplScalars uni = unigram_perplexity(a.model.m, corpus);
  std::ostringstream tsv_text, summary;
  write_ppl_report(tsv_text, summary, rep);
  summary.precision(10);
  summary << "ml_floor_ppl_doc=" << floor.ppl_doc << '\n'
          << "ml_floor_ppl_corpus=" << floor.ppl_corpus << '\n'
          << "unigram_ppl_corpus=" << uni.ppl_corpus << '\n'
          << "r_eval=" << cfg.R_eval << '\n';
  if (!out_dir.empty()) {
    StagedPath staged(out_dir);
    fs::create_directories(staged.path());
    std::ofstream tsv(staged.path() / "ppl.tsv");
    tsv << tsv_text.str();
    std::ofstream(staged.path() / "summary.txt") << summary.str();
    if (!tsv) throw IoError("failed writing the perplexity report");
    tsv.close();
    staged.commit();
  }
  if (rep.empty_docs > 0)
    ctx.err << "warning: " << rep.empty_docs << " empty documents excluded\n";
  ctx.out << summary.str();
  return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& labels_path,
             const std::string& out_path, Context& ctx) {
  const PredictionTable t = read_predictions(pred_path);
  const Labels labels = read_labels(labels_path, t.doc_ids, &t.classes);
  const ClfReport rep = classification_report(t.posteriors, labels.ids, t.classes.size());
  std::ostringstream summary;
  write_clf_report(summary, rep, t.classes);
  if (!out_path.empty()) {
    StagedPath staged(out_path);
    std::ofstream(staged.path()) << summary.str();
    staged.commit();
  }
  if (!rep.zero_probability_docs.empty())
    ctx.err << "warning: " << rep.zero_probability_docs.size()
            << " documents give their true class zero probability\n";
  ctx.out << summary.str();
  return kExitOk;
}

int cmd_uncertainty(const std::string& post_dir, const std::string& bow_path,
                    const std::string& out_path, Context& ctx) {
  const PosteriorArchive posts = load_posteriors(post_dir);
  const BowCorpus corpus = read_bow(bow_path);
  check_aligned(posts, corpus);
  const auto rows = uncertainty_summary(posts.posteriors, corpus);
  std::vector<double> n, tr;
  for (const auto& r : rows) {
    n.push_back(static_cast<double>(r.length));
    tr.push_back(r.trace);
  }
  if (!out_path.empty()) {
    StagedPath staged(out_path);
    std::ofstream out(staged.path());
    out << "doc_id\tn_words\ttrace\n";
    for (const auto& r : rows) out << r.doc_id << '\t' << r.length << '\t' << fmt17(r.trace) << '\n';
    if (!out) throw IoError("failed writing '" + out_path + "'");
    out.close();
    staged.commit();
  }
  ctx.out << "documents=" << rows.size() << '\n';
  if (rows.size() >= 2) ctx.out << "spearman_length_trace=" << spearman(n, tr) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Bayesian subspace multinomial model toolkit", "bsmm"};
  app.require_subcommand(1);

  std::vector<std::string> inputs;
  std::string file_list, vocab_path, out_path, bow_path, model_dir, post_dir, labels_path;
  std::string labels_out, ids_out, pred_path;
  std::size_t min_df = 2;
  std::optional<std::size_t> max_size;
  TrainConfig cfg;
  std::string clf_type = "glcu", priors = "empirical";
  std::size_t em_iters = 10;
  double reg = 0.0;

  auto* bv = app.add_subcommand("build-vocab", "build a vocabulary from raw text");
  bv->add_option("--input", inputs, "directories or files")->expected(0, -1);
  bv->add_option("--file-list", file_list, "file with one document path per line");
  bv->add_option("--min-doc-freq", min_df, "minimum document frequency")->capture_default_str();
  bv->add_option("--max-size", max_size, "keep only the most frequent tokens");
  bv->add_option("--out", out_path, "vocabulary file")->required();

  auto* vz = app.add_subcommand("vectorize", "convert raw text to a bag-of-words file");
  vz->add_option("--input", inputs, "directories or files")->expected(0, -1);
  vz->add_option("--file-list", file_list, "file with one document path per line");
  vz->add_option("--vocab", vocab_path, "vocabulary file")->required();
  vz->add_option("--out", out_path, "bag-of-words file")->required();
  vz->add_option("--labels-out", labels_out, "labels file; class = parent directory name");
  vz->add_option("--ids-out", ids_out, "docID to source path map");

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--bow", bow_path, "training bag-of-words file")->required();
  tr->add_option("--vocab", vocab_path, "vocabulary file");
  tr->add_option("--out", out_path, "output model directory")->required();
  add_train_options(*tr, cfg);

  auto* inf = app.add_subcommand("infer", "infer posteriors for documents");
  inf->add_option("--model", model_dir, "model directory")->required();
  inf->add_option("--bow", bow_path, "bag-of-words file")->required();
  inf->add_option("--out", out_path, "output posterior directory")->required();
  add_train_options(*inf, cfg);

  auto* ct = app.add_subcommand("classify-train", "train a GLC or GLCU classifier");
  ct->add_option("--posteriors", post_dir, "posterior directory")->required();
  ct->add_option("--labels", labels_path, "labels file")->required();
  ct->add_option("--type", clf_type, "classifier")
      ->check(CLI::IsMember({"glc", "glcu"}))
      ->capture_default_str();
  ct->add_option("--priors", priors, "class priors")
      ->check(CLI::IsMember({"empirical", "uniform"}))
      ->capture_default_str();
  ct->add_option("--em-iters", em_iters, "GLCU EM iterations")->capture_default_str();
  ct->add_option("--reg", reg, "ridge added to the within-class covariance")
      ->capture_default_str();
  ct->add_option("--out", out_path, "classifier file (JSON)")->required();

  auto* cl = app.add_subcommand("classify", "predict classes");
  cl->add_option("--model", model_dir, "classifier file")->required();
  cl->add_option("--posteriors", post_dir, "posterior directory")->required();
  cl->add_option("--labels", labels_path, "labels file; prints a report");
  cl->add_option("--out", out_path, "predictions file")->required();

  auto* pp = app.add_subcommand("ppl", "perplexity of a corpus");
  pp->add_option("--model", model_dir, "model directory")->required();
  pp->add_option("--bow", bow_path, "bag-of-words file")->required();
  pp->add_option("--posteriors", post_dir, "posteriors to use instead of inferring");
  pp->add_option("--out", out_path, "report directory");
  add_train_options(*pp, cfg);

  auto* ev = app.add_subcommand("eval", "accuracy and cross-entropy of predictions");
  ev->add_option("--predictions", pred_path, "predictions file")->required();
  ev->add_option("--labels", labels_path, "labels file")->required();
  ev->add_option("--out", out_path, "summary file");

  auto* un = app.add_subcommand("uncertainty", "posterior covariance traces");
  un->add_option("--posteriors", post_dir, "posterior directory")->required();
  un->add_option("--bow", bow_path, "bag-of-words file")->required();
  un->add_option("--out", out_path, "per-document TSV");

  std::vector<std::string> argv_store{"bsmm"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "bsmm: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (bv->parsed()) return cmd_build_vocab(inputs, file_list, min_df, max_size, out_path, ctx);
    if (vz->parsed())
      return cmd_vectorize(inputs, file_list, vocab_path, out_path, labels_out, ids_out, ctx);
    if (tr->parsed()) return cmd_train(bow_path, vocab_path, cfg, out_path, ctx);
    if (inf->parsed()) return cmd_infer(model_dir, bow_path, cfg, out_path, ctx);
    if (ct->parsed())
      return cmd_classify_train(post_dir, labels_path, clf_type, priors, em_iters, reg, out_path,
                                ctx);
    if (cl->parsed()) return cmd_classify(model_dir, post_dir, labels_path, out_path, ctx);
    if (pp->parsed()) return cmd_ppl(model_dir, bow_path, post_dir, cfg, out_path, ctx);
    if (ev->parsed()) return cmd_eval(pred_path, labels_path, out_path, ctx);
    if (un->parsed()) return cmd_uncertainty(post_dir, bow_path, out_path, ctx);
  } catch (const UsageError& e) {
    err << "bsmm: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "bsmm: i/o error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "bsmm: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "bsmm: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "bsmm: i/o error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace bsmm::cli
