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

#include "baed/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace baed {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::input(const Matrix& value) {
  Node n;
  n.borrowed = &value;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.borrowed = &p.value;
  n.param = record_ ? &p : nullptr;
  return push(std::move(n));
}

Var Tape::parameter(const Parameter& p) {
  Node n;
  n.borrowed = &p.value;
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return n.borrowed != nullptr ? *n.borrowed : n.owned;
}

const Matrix& Tape::grad(Var v) const {
  return nodes_[static_cast<std::size_t>(v.id)].grad;
}

Var Tape::record(Matrix value, Pullback pullback) {
  Node n;
  n.owned = std::move(value);
  if (record_) n.pullback = std::move(pullback);
  return push(std::move(n));
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var out) {
  require(value(out).size() == 1, "backward() without a seed needs a scalar");
  backward(out, Matrix::Ones(1, 1));
}

void Tape::backward(Var out, const Matrix& seed) {
  if (!record_) throw Error(ErrorCode::kState, "backward on inference tape");
  const Matrix& v = value(out);
  require(seed.rows() == v.rows() && seed.cols() == v.cols(),
          "backward seed shape");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(out.id)].grad = seed;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.pullback) n.pullback(*this, n.grad);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

// --- operations ------------------------------------------------------------

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
  Matrix out = av * bv;
  return t.record(std::move(out), [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g * tp.value(b).transpose());
    tp.accumulate(b, tp.value(a).transpose() * g);
  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "add: shapes");
  return t.record(av + bv, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "sub: shapes");
  return t.record(av - bv, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, -g);
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "mul: shapes");
  return t.record(av.cwiseProduct(bv), [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g.cwiseProduct(tp.value(b)));
    tp.accumulate(b, g.cwiseProduct(tp.value(a)));
  });
}

Var scale(Tape& t, Var a, double c) {
  return t.record(c * t.value(a), [a, c](Tape& tp, const Matrix& g) {
    tp.accumulate(a, c * g);
  });
}

Var add_row(Tape& t, Var a, Var r) {
  const Matrix& av = t.value(a);
  const Matrix& rv = t.value(r);
  require(rv.rows() == 1 && rv.cols() == av.cols(), "add_row: shapes");
  Matrix out = av.rowwise() + rv.row(0);
  return t.record(std::move(out), [a, r](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(r, g.colwise().sum());
  });
}

Var broadcast_rows(Tape& t, Var r, Eigen::Index m) {
  const Matrix& rv = t.value(r);
  require(rv.rows() == 1, "broadcast_rows: needs a row");
  Matrix out = rv.replicate(m, 1);
  return t.record(std::move(out), [r](Tape& tp, const Matrix& g) {
    tp.accumulate(r, g.colwise().sum());
  });
}

Var add_scaled(Tape& t, Var a, Var s, const Matrix& c) {
  const Matrix& av = t.value(a);
  require(t.value(s).size() == 1, "add_scaled: scale must be 1x1");
  require(av.rows() == c.rows() && av.cols() == c.cols(), "add_scaled: shapes");
  Matrix out = av + t.value(s)(0, 0) * c;
  return t.record(std::move(out), [a, s, c](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    Matrix gs(1, 1);
    gs(0, 0) = g.cwiseProduct(c).sum();
    tp.accumulate(s, gs);
  });
}

Var scale_cols(Tape& t, Var a, Var r) {
  const Matrix& av = t.value(a);
  const Matrix& rv = t.value(r);
  require(rv.rows() == 1 && rv.cols() == av.cols(), "scale_cols: shapes");
  Matrix out = av * rv.row(0).asDiagonal();
  return t.record(std::move(out), [a, r](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g * tp.value(r).row(0).asDiagonal());
    tp.accumulate(r, g.cwiseProduct(tp.value(a)).colwise().sum());
  });
}

Var outer_sum(Tape& t, Var u) {
  const Matrix& uv = t.value(u);
  require(uv.cols() == 1, "outer_sum: needs a column");
  const Eigen::Index m = uv.rows();
  Matrix out = uv.replicate(1, m) + uv.transpose().replicate(m, 1);
  return t.record(std::move(out), [u](Tape& tp, const Matrix& g) {
    Matrix gu = g.rowwise().sum() + g.colwise().sum().transpose();
    tp.accumulate(u, gu);
  });
}

Var relu(Tape& t, Var a) {
  Matrix out = t.value(a).cwiseMax(0.0);
  return t.record(std::move(out), [a](Tape& tp, const Matrix& g) {
    Matrix ga = (tp.value(a).array() > 0.0).select(g, 0.0);
    tp.accumulate(a, ga);
  });
}

Var sigmoid(Tape& t, Var a) {
  Matrix out = t.value(a).unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return t.record(out, [a, s = out](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (g.array() * s.array() * (1.0 - s.array())).matrix());
  });
}

Var softmax_rows(Tape& t, Var a) {
  const Matrix& av = t.value(a);
  Matrix out(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    const double mx = av.row(i).maxCoeff();
    out.row(i) = (av.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return t.record(out, [a, s = out](Tape& tp, const Matrix& g) {
    const ColVector dots = g.cwiseProduct(s).rowwise().sum();
    Matrix ga = s.cwiseProduct((g.colwise() - dots));
    tp.accumulate(a, ga);
  });
}

Var layer_norm_rows(Tape& t, Var a, double eps) {
  const Matrix& av = t.value(a);
  require(av.cols() > 0, "layer_norm_rows: empty rows");
  const auto d = static_cast<double>(av.cols());
  const ColVector mean = av.rowwise().mean();
  Matrix centred = av.colwise() - mean;
  const ColVector inv_std =
      ((centred.array().square().rowwise().sum() / d) + eps).rsqrt().matrix();
  Matrix out = inv_std.asDiagonal() * centred;
  return t.record(out, [a, y = out, inv_std, d](Tape& tp, const Matrix& g) {
    const ColVector g_mean = g.rowwise().mean();
    const ColVector gy_mean = g.cwiseProduct(y).rowwise().sum() / d;
    Matrix ga = (g.colwise() - g_mean) - y.cwiseProduct(gy_mean.replicate(1, y.cols()));
    tp.accumulate(a, inv_std.asDiagonal() * ga);
  });
}

Var mean_rows(Tape& t, Var a) {
  const Matrix& av = t.value(a);
  require(av.rows() > 0, "mean_rows: empty");
  const Eigen::Index m = av.rows();
  Matrix out = av.colwise().mean();
  return t.record(std::move(out), [a, m](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (g / static_cast<double>(m)).replicate(m, 1));
  });
}

Var sum_all(Tape& t, Var a) {
  const Matrix& av = t.value(a);
  Matrix out(1, 1);
  out(0, 0) = av.sum();
  const Eigen::Index r = av.rows();
  const Eigen::Index c = av.cols();
  return t.record(std::move(out), [a, r, c](Tape& tp, const Matrix& g) {
    tp.accumulate(a, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no parts");
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(t.value(p).rows() == rows, "concat_cols: row counts differ");
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    const Matrix& pv = t.value(p);
    out.middleCols(offset, pv.cols()) = pv;
    offset += pv.cols();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return t.record(std::move(out), [ids](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (Var p : ids) {
      const Eigen::Index c = tp.value(p).cols();
      tp.accumulate(p, g.middleCols(off, c));
      off += c;
    }
  });
}

Var slice_cols(Tape& t, Var a, Eigen::Index start, Eigen::Index count) {
  const Matrix& av = t.value(a);
  require(start >= 0 && count >= 0 && start + count <= av.cols(),
          "slice_cols: range");
  Matrix out = av.middleCols(start, count);
  const Eigen::Index rows = av.rows();
  const Eigen::Index cols = av.cols();
  return t.record(std::move(out),
                  [a, start, count, rows, cols](Tape& tp, const Matrix& g) {
                    Matrix ga = Matrix::Zero(rows, cols);
                    ga.middleCols(start, count) = g;
                    tp.accumulate(a, ga);
                  });
}

Var row(Tape& t, Var a, Eigen::Index i) {
  const Matrix& av = t.value(a);
  require(i >= 0 && i < av.rows(), "row: index");
  Matrix out = av.row(i);
  const Eigen::Index rows = av.rows();
  return t.record(std::move(out), [a, i, rows](Tape& tp, const Matrix& g) {
    Matrix ga = Matrix::Zero(rows, g.cols());
    ga.row(i) = g.row(0);
    tp.accumulate(a, ga);
  });
}

Var transpose(Tape& t, Var a) {
  Matrix out = t.value(a).transpose();
  return t.record(std::move(out), [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g.transpose());
  });
}

Var dropout(Tape& t, Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw Error(ErrorCode::kInvalidArgument, "dropout rate");
  const Matrix& av = t.value(a);
  Matrix mask(av.rows(), av.cols());
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.bernoulli(rate) ? 0.0 : keep;
  }
  Matrix out = av.cwiseProduct(mask);
  return t.record(std::move(out), [a, mask](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g.cwiseProduct(mask));
  });
}

Var bce(Tape& t, Var probs, const Matrix& targets, const Matrix& mask,
        double eps) {
  const Matrix& p = t.value(probs);
  require(p.rows() == targets.rows() && p.cols() == targets.cols() &&
              p.rows() == mask.rows() && p.cols() == mask.cols(),
          "bce: shapes");
  const double count = (mask.array() != 0.0).count();
  require(count > 0, "bce: empty mask");
  double total = 0.0;
  Matrix dp = Matrix::Zero(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (mask.data()[i] == 0.0) continue;
    const double raw = p.data()[i];
    const double pc = std::clamp(raw, eps, 1.0 - eps);
    const double y = targets.data()[i];
    total += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    if (raw > eps && raw < 1.0 - eps) {
      dp.data()[i] = (-(y / pc) + (1.0 - y) / (1.0 - pc)) / count;
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total / count;
  return t.record(std::move(out), [probs, dp](Tape& tp, const Matrix& g) {
    tp.accumulate(probs, g(0, 0) * dp);
  });
}

DenseResult dense_forward_backward(DenseKind kind,
                                   std::span<const Matrix> inputs,
                                   std::span<const Matrix> params) {
  auto tape = std::make_shared<Tape>(true);
  std::vector<Var> leaves;
  for (const auto& m : inputs) leaves.push_back(tape->constant(m));
  for (const auto& m : params) leaves.push_back(tape->constant(m));
  auto need = [&](std::size_t n_in, std::size_t n_par) {
    if (inputs.size() != n_in || params.size() != n_par) {
      throw Error(ErrorCode::kShapeMismatch, "dense kernel arity");
    }
  };
  Var out;
  switch (kind) {
    case DenseKind::kLinear:
      need(1, 2);
      out = add_row(*tape, matmul(*tape, leaves[0], leaves[1]), leaves[2]);
      break;
    case DenseKind::kRelu:
      need(1, 0);
      out = relu(*tape, leaves[0]);
      break;
    case DenseKind::kSigmoid:
      need(1, 0);
      out = sigmoid(*tape, leaves[0]);
      break;
    case DenseKind::kSoftmaxRows:
      need(1, 0);
      out = softmax_rows(*tape, leaves[0]);
      break;
    case DenseKind::kLayerNormRows:
      need(1, 0);
      out = layer_norm_rows(*tape, leaves[0]);
      break;
    case DenseKind::kMeanRows:
      need(1, 0);
      out = mean_rows(*tape, leaves[0]);
      break;
    case DenseKind::kAdd:
      need(2, 0);
      out = add(*tape, leaves[0], leaves[1]);
      break;
    case DenseKind::kElementwiseMul:
      need(2, 0);
      out = mul(*tape, leaves[0], leaves[1]);
      break;
    case DenseKind::kConcatCols:
      if (inputs.empty() || !params.empty()) need(1, 0);
      out = concat_cols(*tape, leaves);
      break;
  }
  DenseResult result;
  result.output = tape->value(out);
  result.pullback = [tape, out, leaves](const Matrix& cot) {
    tape->backward(out, cot);
    std::vector<Matrix> grads;
    for (Var v : leaves) {
      const Matrix& g = tape->grad(v);
      const Matrix& val = tape->value(v);
      grads.push_back(g.size() == 0 ? Matrix::Zero(val.rows(), val.cols())
                                    : g);
    }
    return grads;
  };
  return result;
}

}  // namespace baed
