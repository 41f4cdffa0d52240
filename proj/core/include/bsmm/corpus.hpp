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

// Vocabularies and sparse bag-of-words corpora.
//
// On disk a corpus uses the UCI bag-of-words layout:
//
//   D
//   V
//   NNZ
//   docID wordID count     (NNZ lines, 1-based ids, ascending by (docID, wordID))
//
// In memory all ids are 0-based. A vocabulary file holds one token per line
// (line n is id n-1) and a labels file one `docID<TAB>class_name` per line.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace bsmm {

using WordId = std::uint32_t;

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws DataError on duplicate or empty tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& token(WordId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<WordId> find(const std::string& token) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, WordId> index_;
};

struct BowEntry {
  WordId word;
  std::uint32_t count;

  friend bool operator==(const BowEntry&, const BowEntry&) = default;
};

struct BowDocument {
  std::string doc_id;
  std::vector<BowEntry> entries;  // strictly increasing word ids, counts >= 1

  // N_d, the number of word tokens.
  std::uint64_t length() const;
  friend bool operator==(const BowDocument&, const BowDocument&) = default;
};

struct BowCorpus {
  std::size_t vocab_size = 0;
  std::vector<BowDocument> docs;

  std::size_t size() const { return docs.size(); }
  std::uint64_t total_words() const;
  // Per-word corpus counts (length vocab_size).
  std::vector<std::uint64_t> word_counts() const;
  // Throws DataError if any entry violates the document invariants.
  void validate() const;

  friend bool operator==(const BowCorpus&, const BowCorpus&) = default;
};

struct Labels {
  std::vector<std::size_t> ids;  // one class id per document
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
};

struct LabeledCorpus {
  BowCorpus corpus;
  Labels labels;
};

using TokenList = std::vector<std::string>;

// Tokens appearing in at least `min_doc_freq` distinct documents, sorted
// lexicographically. With `max_size` set, only the most frequent tokens (by
// total count, ties broken lexicographically) are kept before sorting.
// Throws UsageError for min_doc_freq == 0 and DataError if nothing survives.
Vocabulary build_vocab(std::span<const TokenList> raw_docs, std::size_t min_doc_freq,
                       std::optional<std::size_t> max_size = std::nullopt);

// Counts in-vocabulary tokens; out-of-vocabulary tokens are dropped.
BowDocument vectorize(std::span<const std::string> raw_doc, const Vocabulary& vocab,
                      std::string doc_id = {});

// Lowercases and splits on anything that is not a letter, digit or apostrophe.
TokenList tokenize(std::string_view text);

BowCorpus read_bow(std::istream& in);
BowCorpus read_bow(const std::filesystem::path& path);
void write_bow(std::ostream& out, const BowCorpus& corpus);
void write_bow(const std::filesystem::path& path, const BowCorpus& corpus);

Vocabulary read_vocab(const std::filesystem::path& path);
void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);

// Reads `docID<TAB>class_name` lines and aligns them with `doc_ids`. Class ids
// follow sorted class-name order unless `known_classes` is given, in which
// case an unknown class name is a DataError. Missing or extra documents are
// DataErrors.
Labels read_labels(const std::filesystem::path& path, std::span<const std::string> doc_ids,
                   const std::vector<std::string>* known_classes = nullptr);
void write_labels(const std::filesystem::path& path, std::span<const std::string> doc_ids,
                  const Labels& labels);

}  // namespace bsmm
