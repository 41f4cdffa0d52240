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

#include "bsmm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "bsmm/error.hpp"

namespace bsmm {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw DataError("vocabulary token " + std::to_string(i) + " is empty");
    if (!index_.emplace(tokens_[i], static_cast<WordId>(i)).second)
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

std::optional<WordId> Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t BowDocument::length() const {
  std::uint64_t n = 0;
  for (const auto& e : entries) n += e.count;
  return n;
}

std::uint64_t BowCorpus::total_words() const {
  std::uint64_t n = 0;
  for (const auto& d : docs) n += d.length();
  return n;
}

std::vector<std::uint64_t> BowCorpus::word_counts() const {
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (const auto& d : docs)
    for (const auto& e : d.entries) counts[e.word] += e.count;
  return counts;
}

void BowCorpus::validate() const {
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& entries = docs[d].entries;
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (entries[j].word >= vocab_size)
        throw DataError("document " + std::to_string(d) + " has word id " +
                        std::to_string(entries[j].word) + " >= V=" + std::to_string(vocab_size));
      if (entries[j].count == 0)
        throw DataError("document " + std::to_string(d) + " has a zero count");
      if (j > 0 && entries[j].word <= entries[j - 1].word)
        throw DataError("document " + std::to_string(d) + " word ids are not increasing");
    }
  }
}

Vocabulary build_vocab(std::span<const TokenList> raw_docs, std::size_t min_doc_freq,
                       std::optional<std::size_t> max_size) {
  if (min_doc_freq < 1) throw UsageError("min_doc_freq must be >= 1");
  struct Freq {
    std::size_t docs = 0;
    std::uint64_t total = 0;
  };
  std::map<std::string, Freq> freq;
  for (const auto& doc : raw_docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& tok : doc) {
      if (tok.empty()) continue;
      auto& f = freq[tok];
      ++f.total;
      if (seen.insert(tok).second) ++f.docs;
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, f] : freq)
    if (f.docs >= min_doc_freq) kept.emplace_back(tok, f.total);

  if (max_size && kept.size() > *max_size) {
    // kept is lexicographic, so stable_sort breaks count ties lexicographically.
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    kept.resize(*max_size);
    std::sort(kept.begin(), kept.end());
  }
  if (kept.empty()) throw DataError("vocabulary is empty after pruning");

  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, count] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens));
}

BowDocument vectorize(std::span<const std::string> raw_doc, const Vocabulary& vocab,
                      std::string doc_id) {
  std::map<WordId, std::uint32_t> counts;
  for (const auto& tok : raw_doc)
    if (auto id = vocab.find(tok)) ++counts[*id];
  BowDocument doc{std::move(doc_id), {}};
  doc.entries.reserve(counts.size());
  for (auto [id, c] : counts) doc.entries.push_back({id, c});
  return doc;
}

TokenList tokenize(std::string_view text) {
  TokenList out;
  std::string cur;
  auto flush = [&] {
    // Strip apostrophes at the edges ("'tis" -> "tis", "dogs'" -> "dogs").
    std::size_t b = cur.find_first_not_of('\'');
    std::size_t e = cur.find_last_not_of('\'');
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      flush();
    }
  }
  if (!cur.empty()) flush();
  return out;
}

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Parses whitespace-separated unsigned integers from one line.
std::vector<std::uint64_t> parse_uints(const std::string& line, std::size_t lineno) {
  std::vector<std::uint64_t> vals;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    std::uint64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r'))
      throw ParseError("expected a non-negative integer", lineno);
    vals.push_back(v);
    p = next;
  }
  return vals;
}

}  // namespace

BowCorpus read_bow(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t header[3];
  const char* names[3] = {"document count D", "vocabulary size V", "entry count NNZ"};
  for (int h = 0; h < 3; ++h) {
    if (!std::getline(in, line)) throw ParseError(std::string("missing ") + names[h], lineno + 1);
    ++lineno;
    auto v = parse_uints(line, lineno);
    if (v.size() != 1) throw ParseError(std::string("malformed header: ") + names[h], lineno);
    header[h] = v[0];
  }
  BowCorpus corpus;
  corpus.vocab_size = header[1];
  corpus.docs.resize(header[0]);
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) corpus.docs[d].doc_id = std::to_string(d + 1);

  std::uint64_t prev_doc = 0, prev_word = 0;
  for (std::uint64_t n = 0; n < header[2]; ++n) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(header[2]) + " entries, found " +
                           std::to_string(n),
                       lineno + 1);
    ++lineno;
    auto v = parse_uints(line, lineno);
    if (v.size() != 3) throw ParseError("expected 'docID wordID count'", lineno);
    const auto [doc, word, count] = std::tuple{v[0], v[1], v[2]};
    if (doc < 1 || doc > header[0]) throw ParseError("docID out of range", lineno);
    if (word < 1 || word > header[1]) throw ParseError("wordID out of range", lineno);
    if (count < 1) throw ParseError("count must be positive", lineno);
    if (count > UINT32_MAX) throw ParseError("count too large", lineno);
    if (doc < prev_doc || (doc == prev_doc && word <= prev_word))
      throw ParseError("entries must be strictly ascending by (docID, wordID)", lineno);
    prev_doc = doc;
    prev_word = word;
    corpus.docs[doc - 1].entries.push_back(
        {static_cast<WordId>(word - 1), static_cast<std::uint32_t>(count)});
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw ParseError("trailing data after NNZ entries", lineno);
  }
  return corpus;
}

BowCorpus read_bow(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_bow(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_bow(std::ostream& out, const BowCorpus& corpus) {
  corpus.validate();
  std::size_t nnz = 0;
  for (const auto& d : corpus.docs) nnz += d.entries.size();
  out << corpus.docs.size() << '\n' << corpus.vocab_size << '\n' << nnz << '\n';
  for (std::size_t d = 0; d < corpus.docs.size(); ++d)
    for (const auto& e : corpus.docs[d].entries)
      out << d + 1 << ' ' << e.word + 1 << ' ' << e.count << '\n';
}

void write_bow(const std::filesystem::path& path, const BowCorpus& corpus) {
  auto out = open_out(path);
  write_bow(out, corpus);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Vocabulary read_vocab(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(path.string() + ": empty vocabulary token", lineno);
    tokens.push_back(std::move(line));
  }
  if (tokens.empty()) throw DataError(path.string() + ": vocabulary is empty");
  return Vocabulary(std::move(tokens));
}

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto out = open_out(path);
  for (const auto& t : vocab.tokens()) out << t << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Labels read_labels(const std::filesystem::path& path, std::span<const std::string> doc_ids,
                   const std::vector<std::string>* known_classes) {
  auto in = open_in(path);
  std::unordered_map<std::string, std::string> by_doc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw ParseError(path.string() + ": expected 'docID<TAB>class_name'", lineno);
    if (!by_doc.emplace(line.substr(0, tab), line.substr(tab + 1)).second)
      throw ParseError(path.string() + ": duplicate docID '" + line.substr(0, tab) + "'",
                       lineno);
  }

  Labels out;
  if (known_classes != nullptr) {
    out.class_names = *known_classes;
  } else {
    for (const auto& [doc, cls] : by_doc) out.class_names.push_back(cls);
    std::sort(out.class_names.begin(), out.class_names.end());
    out.class_names.erase(std::unique(out.class_names.begin(), out.class_names.end()),
                          out.class_names.end());
  }
  std::unordered_map<std::string, std::size_t> class_index;
  for (std::size_t c = 0; c < out.class_names.size(); ++c) class_index[out.class_names[c]] = c;

  out.ids.reserve(doc_ids.size());
  for (const auto& doc : doc_ids) {
    auto it = by_doc.find(doc);
    if (it == by_doc.end())
      throw DataError(path.string() + ": no label for document '" + doc + "'");
    auto c = class_index.find(it->second);
    if (c == class_index.end())
      throw DataError(path.string() + ": unknown class '" + it->second + "'");
    out.ids.push_back(c->second);
  }
  if (by_doc.size() != doc_ids.size())
    throw DataError(path.string() + ": labels file has " + std::to_string(by_doc.size()) +
                    " entries for " + std::to_string(doc_ids.size()) + " documents");
  return out;
}

void write_labels(const std::filesystem::path& path, std::span<const std::string> doc_ids,
                  const Labels& labels) {
  if (labels.ids.size() != doc_ids.size())
    throw DataError("labels and document ids are not aligned");
  auto out = open_out(path);
  for (std::size_t d = 0; d < doc_ids.size(); ++d)
    out << doc_ids[d] << '\t' << labels.class_names.at(labels.ids[d]) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace bsmm
