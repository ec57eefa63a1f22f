// Copyright 2026 The BAED Authors.
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

#ifndef BAED_NUMERIC_HPP_
#define BAED_NUMERIC_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace baed {

using Scalar = double;
using Matrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kParse,
  kIo,
  kNumeric,
  kState,
};

std::string_view error_code_name(ErrorCode code);

// All recoverable failures in the library surface as baed::Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Counter-based random streams. A stream is a pure function of
// (seed, label, counter), so work split across callers draws the same
// numbers regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, "root", 0) {}
  Rng(std::uint64_t seed, std::string_view label, std::uint64_t counter = 0);

  // Child stream keyed on this stream's key, independent of how many draws
  // have been taken from *this.
  Rng stream(std::string_view label, std::uint64_t counter = 0) const;

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double normal();
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[uniform_index(i)]);
    }
  }

 private:
  void reseed(std::uint64_t key);

  std::uint64_t key_ = 0;
  std::uint64_t s_[4] = {0, 0, 0, 0};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);
std::string hex64(std::uint64_t v);

// Independent Bernoulli draws. In symmetric mode only i<j is drawn and
// mirrored; the diagonal stays zero.
Matrix sample_bernoulli_matrix(Rng& rng, const Matrix& probs, bool symmetric);
Matrix sample_gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                              double mean, double stddev);

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <class Derived>
bool is_symmetric_binary(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0) return false;
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) != a(j, i)) return false;
      if (a(i, j) != 0 && a(i, j) != 1) return false;
    }
  }
  return true;
}

struct Parameter {
  Matrix value;
  Matrix grad;
};

// Named parameters with paired gradient buffers. Iteration order is the
// lexicographic name order, which fixes the checkpoint layout.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const {
    return params_.count(name) != 0;
  }

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  std::size_t coefficient_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConstants constants;
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
  std::int64_t step = 0;
};

// Bias-corrected Adam. Gradients are zeroed afterwards. A non-finite
// gradient aborts the whole step before anything is modified.
void adam_step(ParamStore& params, AdamState& state, double lr);

// Checkpoint: manifest.json (names, shapes) plus one little-endian float64
// blob per parameter, written atomically.
void save_checkpoint(const ParamStore& params,
                     const std::filesystem::path& dir);
ParamStore load_checkpoint(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
// Write to a sibling temp file, then rename over the destination.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

// Glorot-uniform initialisation.
Matrix glorot(Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out);

}  // namespace baed

#endif  // BAED_NUMERIC_HPP_
