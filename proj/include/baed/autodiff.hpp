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

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape records every operation applied to its variables together with a
// pullback closure. backward() replays the closures in reverse order and
// accumulates gradients; parameter leaves add their gradient into the
// owning ParamStore. A tape built with record=false evaluates the same
// graph with no bookkeeping, which is what inference paths use.

#ifndef BAED_AUTODIFF_HPP_
#define BAED_AUTODIFF_HPP_

#include "baed/numeric.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace baed {

class Tape;

struct Var {
  int id = -1;
};

class Tape {
 public:
  using Pullback = std::function<void(Tape&, const Matrix& grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);
  // Borrowed leaf; the matrix must outlive the tape.
  Var input(const Matrix& value);
  Var parameter(Parameter& p);
  // Read-only parameter leaf; its gradient is never written back.
  Var parameter(const Parameter& p);

  const Matrix& value(Var v) const;
  // Gradient of the last backward() seed with respect to v (zero-sized when
  // v did not influence the output).
  const Matrix& grad(Var v) const;

  void backward(Var out);
  void backward(Var out, const Matrix& seed);

  Var record(Matrix value, Pullback pullback);
  void accumulate(Var v, const Matrix& g);

 private:
  struct Node {
    Matrix owned;
    const Matrix* borrowed = nullptr;
    Parameter* param = nullptr;
    Pullback pullback;
    Matrix grad;
  };

  Var push(Node node);

  bool record_;
  std::vector<Node> nodes_;
};

// Looks up a named parameter as a tape leaf.
using ParamBinder = std::function<Var(const std::string&)>;

// Binds a store by reference; a const store yields read-only leaves.
template <class Store>
ParamBinder bind_params(Tape& t, Store& store) {
  return [&t, &store](const std::string& name) {
    return t.parameter(store.at(name));
  };
}

// --- operations ------------------------------------------------------------

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
// a (m x c) + row (1 x c) broadcast down the rows.
Var add_row(Tape& t, Var a, Var row);
// 1 x c row repeated into m x c.
Var broadcast_rows(Tape& t, Var row, Eigen::Index m);
// a + s * c where s is a 1x1 variable and c a fixed matrix.
Var add_scaled(Tape& t, Var a, Var s, const Matrix& c);
// a * diag(row).
Var scale_cols(Tape& t, Var a, Var row);
// u (m x 1) -> m x m matrix u_i + u_j.
Var outer_sum(Tape& t, Var u);
Var relu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var softmax_rows(Tape& t, Var a);
// Per-row standardisation (x - mean) / sqrt(var + eps), no affine terms.
Var layer_norm_rows(Tape& t, Var a, double eps = 1e-5);
Var mean_rows(Tape& t, Var a);
Var sum_all(Tape& t, Var a);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var slice_cols(Tape& t, Var a, Eigen::Index start, Eigen::Index count);
Var row(Tape& t, Var a, Eigen::Index i);
Var transpose(Tape& t, Var a);
// Inverted dropout; identity when rate == 0.
Var dropout(Tape& t, Var a, double rate, Rng& rng);
// Mean binary cross-entropy over entries where mask != 0, with the
// probability clamped to [eps, 1 - eps]. Clamped entries pass no gradient.
Var bce(Tape& t, Var probs, const Matrix& targets, const Matrix& mask,
        double eps);

// Single dense map with its pullback, for kernel-level testing.
enum class DenseKind {
  kLinear,
  kRelu,
  kSigmoid,
  kSoftmaxRows,
  kLayerNormRows,
  kMeanRows,
  kAdd,
  kElementwiseMul,
  kConcatCols,
};

struct DenseResult {
  Matrix output;
  // Output cotangent -> cotangents of inputs followed by params.
  std::function<std::vector<Matrix>(const Matrix&)> pullback;
};

// linear: inputs {x}, params {W, b}; every other kind takes inputs only.
DenseResult dense_forward_backward(DenseKind kind,
                                   std::span<const Matrix> inputs,
                                   std::span<const Matrix> params = {});

}  // namespace baed

#endif  // BAED_AUTODIFF_HPP_
