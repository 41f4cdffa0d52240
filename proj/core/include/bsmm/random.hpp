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

// Counter-based standard-normal streams.
//
// Every draw is a pure function of (seed, stream, a, b, index), so samples can
// be regenerated for any (document, iteration) pair without being stored and
// independently of thread scheduling.

#include <cstdint>

#include <Eigen/Core>

namespace bsmm {

enum class Stream : std::uint64_t {
  kInitT = 1,
  kTrainEps = 2,
  kInferEps = 3,
  kEvalEps = 4,
  kSynthetic = 5,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0);

  // Uniform in (0, 1), never exactly 0 or 1.
  double uniform();
  double normal();
  std::uint64_t next_u64();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// R x K standard-normal matrix for (seed, stream, a, b).
Eigen::MatrixXd normal_matrix(std::uint64_t seed, Stream stream, std::uint64_t a,
                              std::uint64_t b, Eigen::Index rows, Eigen::Index cols);

}  // namespace bsmm
