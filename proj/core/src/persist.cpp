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

#include "bsmm/persist.hpp"

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <unistd.h>

#include "bsmm/error.hpp"

namespace fs = std::filesystem;

namespace bsmm {
namespace {

std::uint64_t byteswap64(std::uint64_t v) {
  v = ((v & 0x00ff00ff00ff00ffULL) << 8) | ((v >> 8) & 0x00ff00ff00ff00ffULL);
  v = ((v & 0x0000ffff0000ffffULL) << 16) | ((v >> 16) & 0x0000ffff0000ffffULL);
  return (v << 32) | (v >> 32);
}

using Meta = std::map<std::string, std::string>;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_meta(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Meta read_meta(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Meta meta;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError(path.string() + ": expected key=value", lineno);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

const std::string& field(const Meta& meta, const fs::path& path, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError(path.string() + ": missing field '" + key + "'");
  return it->second;
}

std::uint64_t uint_field(const Meta& meta, const fs::path& path, const std::string& key) {
  const auto& s = field(meta, path, key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || *end != '\0' || errno != 0)
    throw DataError(path.string() + ": field '" + key + "' is not a non-negative integer: '" +
                    s + "'");
  return v;
}

double double_field(const Meta& meta, const fs::path& path, const std::string& key) {
  const auto& s = field(meta, path, key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw DataError(path.string() + ": field '" + key + "' is not a number");
  return v;
}

void check_version(const Meta& meta, const fs::path& path) {
  const auto v = uint_field(meta, path, "format_version");
  if (v != static_cast<std::uint64_t>(kFormatVersion))
    throw DataError(path.string() + ": unsupported format_version " + std::to_string(v) +
                    " (expected " + std::to_string(kFormatVersion) + ")");
}

std::vector<double> read_tensor(const fs::path& path, std::uint64_t expected, const char* what) {
  std::error_code ec;
  const auto bytes = fs::file_size(path, ec);
  if (ec) throw DataError("missing tensor file '" + path.string() + "'");
  if (bytes != expected * sizeof(double))
    throw DataError("tensor '" + path.string() + "' has " + std::to_string(bytes) +
                    " bytes, expected " + std::to_string(expected * sizeof(double)) + " for " +
                    what);
  return read_f64(path);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

void write_f64(const fs::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  std::vector<std::uint64_t> raw(values.size());
  std::memcpy(raw.data(), values.data(), values.size() * sizeof(double));
  if constexpr (std::endian::native == std::endian::big)
    for (auto& r : raw) r = byteswap64(r);
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<double> read_f64(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(double) != 0)
    throw DataError("tensor '" + path.string() + "' is truncated (" + std::to_string(bytes) +
                    " bytes)");
  in.seekg(0);
  std::vector<std::uint64_t> raw(bytes / sizeof(double));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("failed reading '" + path.string() + "'");
  if constexpr (std::endian::native == std::endian::big)
    for (auto& r : raw) r = byteswap64(r);
  std::vector<double> out(raw.size());
  std::memcpy(out.data(), raw.data(), bytes);
  return out;
}

void save_model(const fs::path& dir, const ModelArchive& a) {
  a.model.validate();
  if (a.vocab.size() != a.model.vocab_size())
    throw DataError("vocabulary has " + std::to_string(a.vocab.size()) + " tokens, model V=" +
                    std::to_string(a.model.vocab_size()));
  fs::create_directories(dir);
  write_meta(dir / "meta.txt", {{"format_version", std::to_string(kFormatVersion)},
                                {"V", std::to_string(a.model.vocab_size())},
                                {"K", std::to_string(a.model.dim())},
                                {"lambda", format_double(a.model.lambda)},
                                {"omega", format_double(a.omega)},
                                {"seed", std::to_string(a.seed)},
                                {"iteration", std::to_string(a.iteration)}});
  write_f64(dir / "m.f64", {a.model.m.data(), static_cast<std::size_t>(a.model.m.size())});
  write_f64(dir / "T.f64", {a.model.T.data(), static_cast<std::size_t>(a.model.T.size())});
  write_vocab(dir / "vocab.txt", a.vocab);
}

ModelArchive load_model(const fs::path& dir) {
  const auto meta_path = dir / "meta.txt";
  const Meta meta = read_meta(meta_path);
  check_version(meta, meta_path);
  const auto v = uint_field(meta, meta_path, "V");
  const auto k = uint_field(meta, meta_path, "K");
  if (v == 0) throw DataError(meta_path.string() + ": field 'V' must be positive");
  if (k == 0) throw DataError(meta_path.string() + ": field 'K' must be positive");

  ModelArchive a;
  a.model.lambda = double_field(meta, meta_path, "lambda");
  if (!(a.model.lambda > 0.0)) throw DataError(meta_path.string() + ": field 'lambda' must be positive");
  a.omega = double_field(meta, meta_path, "omega");
  a.seed = uint_field(meta, meta_path, "seed");
  a.iteration = uint_field(meta, meta_path, "iteration");

  const auto m = read_tensor(dir / "m.f64", v, "m (V entries, field 'V')");
  const auto t = read_tensor(dir / "T.f64", v * k, "T (V x K entries, fields 'V' and 'K')");
  a.model.m = Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(v));
  a.model.T = Eigen::Map<const RowMatrix>(t.data(), static_cast<Eigen::Index>(v),
                                          static_cast<Eigen::Index>(k));
  a.vocab = read_vocab(dir / "vocab.txt");
  if (a.vocab.size() != v)
    throw DataError((dir / "vocab.txt").string() + " has " + std::to_string(a.vocab.size()) +
                    " tokens but field 'V' is " + std::to_string(v));
  a.model.validate();
  return a;
}

void save_posteriors(const fs::path& dir, const PosteriorArchive& a) {
  if (a.doc_ids.size() != a.posteriors.size())
    throw DataError("posterior archive needs one doc id per posterior");
  const std::size_t k = a.posteriors.empty() ? 0 : a.posteriors.front().dim();
  std::vector<double> nu, lsd;
  nu.reserve(a.posteriors.size() * k);
  lsd.reserve(a.posteriors.size() * k);
  for (const auto& p : a.posteriors) {
    if (p.dim() != k || static_cast<std::size_t>(p.lsd.size()) != k)
      throw DataError("posteriors have inconsistent dimensions");
    nu.insert(nu.end(), p.nu.data(), p.nu.data() + k);
    lsd.insert(lsd.end(), p.lsd.data(), p.lsd.data() + k);
  }
  fs::create_directories(dir);
  write_meta(dir / "meta.txt", {{"format_version", std::to_string(kFormatVersion)},
                                {"D", std::to_string(a.doc_ids.size())},
                                {"K", std::to_string(k)}});
  {
    std::ofstream out(dir / "docs.txt");
    if (!out) throw IoError("cannot write '" + (dir / "docs.txt").string() + "'");
    for (const auto& id : a.doc_ids) {
      if (id.empty() || id.find_first_of("\n\t") != std::string::npos)
        throw DataError("doc id '" + id + "' is empty or contains a tab/newline");
      out << id << '\n';
    }
  }
  write_f64(dir / "nu.f64", nu);
  write_f64(dir / "lsd.f64", lsd);
}

PosteriorArchive load_posteriors(const fs::path& dir) {
  const auto meta_path = dir / "meta.txt";
  const Meta meta = read_meta(meta_path);
  check_version(meta, meta_path);
  const auto d = uint_field(meta, meta_path, "D");
  const auto k = uint_field(meta, meta_path, "K");
  if (d > 0 && k == 0) throw DataError(meta_path.string() + ": field 'K' must be positive");

  PosteriorArchive a;
  a.doc_ids = read_lines(dir / "docs.txt");
  if (a.doc_ids.size() != d)
    throw DataError((dir / "docs.txt").string() + " lists " + std::to_string(a.doc_ids.size()) +
                    " documents but field 'D' is " + std::to_string(d));
  const auto nu = read_tensor(dir / "nu.f64", d * k, "nu (D x K rows, fields 'D' and 'K')");
  const auto lsd = read_tensor(dir / "lsd.f64", d * k, "lsd (D x K rows, fields 'D' and 'K')");
  a.posteriors.reserve(d);
  const auto kk = static_cast<Eigen::Index>(k);
  for (std::size_t i = 0; i < d; ++i)
    a.posteriors.push_back({Eigen::Map<const Vector>(nu.data() + i * k, kk),
                            Eigen::Map<const Vector>(lsd.data() + i * k, kk)});
  return a;
}

StagedPath::StagedPath(fs::path target) : target_(std::move(target)) {
  if (target_.filename().empty()) target_ = target_.parent_path();
  staging_ = target_;
  staging_ += ".staging." + std::to_string(::getpid());
  std::error_code ec;
  fs::remove_all(staging_, ec);
}

StagedPath::~StagedPath() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedPath::commit() {
  if (!fs::exists(staging_)) throw IoError("nothing was written to '" + staging_.string() + "'");
  std::error_code ec;
  if (fs::exists(target_)) {
    auto old = target_;
    old += ".old." + std::to_string(::getpid());
    fs::remove_all(old, ec);
    fs::rename(target_, old);
    fs::rename(staging_, target_);
    fs::remove_all(old, ec);
  } else {
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    fs::rename(staging_, target_);
  }
  committed_ = true;
}

}  // namespace bsmm
