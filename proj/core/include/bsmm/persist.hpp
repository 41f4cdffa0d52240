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

// On-disk archives. Tensors are raw row-major little-endian float64; metadata
// is `key=value` text.
//
//   model/       meta.txt  m.f64  T.f64  vocab.txt
//   posteriors/  meta.txt  docs.txt  nu.f64  lsd.f64

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bsmm/corpus.hpp"
#include "bsmm/smm.hpp"

namespace bsmm {

inline constexpr int kFormatVersion = 1;

struct ModelArchive {
  SmmModel model;
  Vocabulary vocab;
  double omega = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
};

struct PosteriorArchive {
  std::vector<std::string> doc_ids;
  std::vector<Posterior> posteriors;
};

// Writes into `dir`, creating it if needed.
void save_model(const std::filesystem::path& dir, const ModelArchive& archive);
// Throws DataError naming the offending field or file on any inconsistency.
ModelArchive load_model(const std::filesystem::path& dir);

void save_posteriors(const std::filesystem::path& dir, const PosteriorArchive& archive);
PosteriorArchive load_posteriors(const std::filesystem::path& dir);

void write_f64(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64(const std::filesystem::path& path);

// Builds output in a sibling staging path and moves it into place on
// commit(); if never committed, the staging path is removed. Use it so a
// failed command leaves no partial output behind.
class StagedPath {
 public:
  explicit StagedPath(std::filesystem::path target);
  ~StagedPath();
  StagedPath(const StagedPath&) = delete;
  StagedPath& operator=(const StagedPath&) = delete;

  const std::filesystem::path& path() const { return staging_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

}  // namespace bsmm
