// SPDX-License-Identifier: Apache-2.0
#include "factscribe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "factscribe/errors.hpp"

namespace factscribe {

std::string shape_string(Index rows, Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

namespace {

std::string shape_of(const Var& v) { return shape_string(v.rows(), v.cols()); }

Tape& common_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
  return a.tape();
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
}

bool is_vector(const Var& v) { return v.rows() == 1 || v.cols() == 1; }

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::string name, Matrix value, bool requires_grad)
    : name_(std::move(name)), value_(std::move(value)), requires_grad_(requires_grad) {
  if (requires_grad_) grad_ = Matrix::Zero(value_.rows(), value_.cols());
}

void Tensor::zero_grad() {
  if (requires_grad_) grad_.setZero(value_.rows(), value_.cols());
}

// ---------------------------------------------------------------------------
// Var

Tape& Var::tape() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return *tape_;
}

const Matrix& Var::value() const { return tape().value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractError("scalar() on non-scalar " + shape_of(*this));
  return v(0, 0);
}

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddColumn: return "add_column";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Relu: return "relu";
    case OpKind::VConcat: return "vconcat";
    case OpKind::HConcat: return "hconcat";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::Sum: return "sum";
    case OpKind::RowMean: return "row_mean";
    case OpKind::SegmentSum: return "segment_sum";
    case OpKind::Embedding: return "embedding";
    case OpKind::MaskedSoftmax: return "masked_softmax";
    case OpKind::Nll: return "nll";
    case OpKind::Transpose: return "transpose";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape(bool record_gradients) : record_(record_gradients) { nodes_.reserve(256); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::leaf(Tensor& tensor) {
  Node n;
  n.kind = OpKind::Leaf;
  n.external = &tensor.value();
  if (record_ && tensor.requires_grad()) {
    n.param = &tensor;
    n.needs_grad = true;
  }
  return push(std::move(n));
}

Var Tape::leaf(const Tensor& tensor) {
  Node n;
  n.kind = OpKind::Leaf;
  n.external = &tensor.value();
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::record(OpKind kind, Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(kind, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Tape::record(OpKind kind, Matrix value, std::span<const Var> inputs, BackwardFn fn) {
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  bool any = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("input recorded on a different tape");
    n.inputs.push_back(in.id());
    any = any || needs_grad(in.id());
  }
  if (record_ && any) {
    n.needs_grad = true;
    n.backward = std::move(fn);
  }
  return push(std::move(n));
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return n.external ? *n.external : n.value;
}

Matrix& Tape::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.param) return n.param->grad();
  if (n.grad.size() == 0) {
    const Matrix& v = value(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss, double seed) {
  if (&loss.tape() != this) throw ContractError("backward: loss recorded on a different tape");
  const Matrix& lv = value(loss.id());
  if (lv.size() != 1) {
    throw ContractError("backward: loss must be scalar, got " + shape_string(lv.rows(), lv.cols()));
  }
  if (!needs_grad(loss.id())) return;
  grad_buffer(loss.id())(0, 0) += seed;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Primitives

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree " + shape_of(a) + " x " + shape_of(b));
  }
  Matrix out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.record(OpKind::MatMul, std::move(out), {a, b}, [ia, ib](Tape& tp, int, const Matrix& g) {
    if (tp.needs_grad(ia)) tp.grad_buffer(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.needs_grad(ib)) tp.grad_buffer(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape("add", a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(OpKind::Add, a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, int, const Matrix& g) {
    if (tp.needs_grad(ia)) tp.grad_buffer(ia) += g;
    if (tp.needs_grad(ib)) tp.grad_buffer(ib) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape("sub", a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(OpKind::Sub, a.value() - b.value(), {a, b}, [ia, ib](Tape& tp, int, const Matrix& g) {
    if (tp.needs_grad(ia)) tp.grad_buffer(ia) += g;
    if (tp.needs_grad(ib)) tp.grad_buffer(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape("mul", a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(OpKind::Mul, a.value().cwiseProduct(b.value()), {a, b},
                  [ia, ib](Tape& tp, int, const Matrix& g) {
                    if (tp.needs_grad(ia)) tp.grad_buffer(ia) += g.cwiseProduct(tp.value(ib));
                    if (tp.needs_grad(ib)) tp.grad_buffer(ib) += g.cwiseProduct(tp.value(ia));
                  });
}

Var scale(Var a, double factor) {
  const int ia = a.id();
  return a.tape().record(OpKind::Scale, a.value() * factor, {a},
                         [ia, factor](Tape& tp, int, const Matrix& g) { tp.grad_buffer(ia) += factor * g; });
}

Var add_column(Var m, Var v) {
  Tape& t = common_tape(m, v);
  if (v.cols() != 1 || v.rows() != m.rows()) {
    throw ShapeError("add_column: " + shape_of(m) + " + column " + shape_of(v));
  }
  Matrix out = m.value().colwise() + v.value().col(0);
  const int im = m.id(), iv = v.id();
  return t.record(OpKind::AddColumn, std::move(out), {m, v}, [im, iv](Tape& tp, int, const Matrix& g) {
    if (tp.needs_grad(im)) tp.grad_buffer(im) += g;
    if (tp.needs_grad(iv)) tp.grad_buffer(iv) += g.rowwise().sum();
  });
}

Var tanh(Var a) {
  const int ia = a.id();
  Matrix out = a.value().array().tanh().matrix();
  return a.tape().record(OpKind::Tanh, std::move(out), {a}, [ia](Tape& tp, int self, const Matrix& g) {
    const Matrix& y = tp.value(self);
    tp.grad_buffer(ia).array() += g.array() * (1.0 - y.array().square());
  });
}

Var sigmoid(Var a) {
  const int ia = a.id();
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape().record(OpKind::Sigmoid, std::move(out), {a}, [ia](Tape& tp, int self, const Matrix& g) {
    const Matrix& y = tp.value(self);
    tp.grad_buffer(ia).array() += g.array() * y.array() * (1.0 - y.array());
  });
}

Var relu(Var a) {
  const int ia = a.id();
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record(OpKind::Relu, std::move(out), {a}, [ia](Tape& tp, int, const Matrix& g) {
    const Matrix& x = tp.value(ia);
    tp.grad_buffer(ia).array() += (x.array() > 0.0).select(g.array(), 0.0);
  });
}

Var vconcat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("vconcat: no operands");
  Tape& t = parts.front().tape();
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("vconcat: column count mismatch " + shape_of(parts.front()) + " vs " + shape_of(p));
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<Index> offsets;
  Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(r);
    r += p.rows();
  }
  return t.record(OpKind::VConcat, std::move(out), parts,
                  [ids = std::move(ids), offsets = std::move(offsets)](Tape& tp, int, const Matrix& g) {
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!tp.needs_grad(ids[k])) continue;
                      Matrix& dst = tp.grad_buffer(ids[k]);
                      dst += g.middleRows(offsets[k], dst.rows());
                    }
                  });
}

Var vconcat(std::initializer_list<Var> parts) {
  return vconcat(std::span<const Var>(parts.begin(), parts.size()));
}

Var hconcat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("hconcat: no operands");
  Tape& t = parts.front().tape();
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("hconcat: row count mismatch " + shape_of(parts.front()) + " vs " + shape_of(p));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<Index> offsets;
  Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(c);
    c += p.cols();
  }
  return t.record(OpKind::HConcat, std::move(out), parts,
                  [ids = std::move(ids), offsets = std::move(offsets)](Tape& tp, int, const Matrix& g) {
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!tp.needs_grad(ids[k])) continue;
                      Matrix& dst = tp.grad_buffer(ids[k]);
                      dst += g.middleCols(offsets[k], dst.cols());
                    }
                  });
}

Var hconcat(std::initializer_list<Var> parts) {
  return hconcat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_rows(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + shape_of(a));
  }
  const int ia = a.id();
  return a.tape().record(OpKind::SliceRows, a.value().middleRows(start, count), {a},
                         [ia, start, count](Tape& tp, int, const Matrix& g) {
                           tp.grad_buffer(ia).middleRows(start, count) += g;
                         });
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + shape_of(a));
  }
  const int ia = a.id();
  return a.tape().record(OpKind::SliceCols, a.value().middleCols(start, count), {a},
                         [ia, start, count](Tape& tp, int, const Matrix& g) {
                           tp.grad_buffer(ia).middleCols(start, count) += g;
                         });
}

Var sum(Var a) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(OpKind::Sum, std::move(out), {a}, [ia](Tape& tp, int, const Matrix& g) {
    tp.grad_buffer(ia).array() += g(0, 0);
  });
}

Var row_mean(Var a) {
  if (a.cols() == 0) throw ShapeError("row_mean: no columns in " + shape_of(a));
  const int ia = a.id();
  const double inv = 1.0 / static_cast<double>(a.cols());
  Matrix out = a.value().rowwise().sum() * inv;
  return a.tape().record(OpKind::RowMean, std::move(out), {a}, [ia, inv](Tape& tp, int, const Matrix& g) {
    tp.grad_buffer(ia).colwise() += g.col(0) * inv;
  });
}

Var segment_sum(Var a, std::span<const int> lengths) {
  Index total = 0;
  for (int len : lengths) {
    if (len < 1) throw ContractError("segment_sum: empty segment");
    total += len;
  }
  if (total != a.cols()) {
    throw ShapeError("segment_sum: segments cover " + std::to_string(total) + " columns of " + shape_of(a));
  }
  const Matrix& x = a.value();
  Matrix out(x.rows(), static_cast<Index>(lengths.size()));
  Index c = 0;
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    out.col(static_cast<Index>(s)) = x.middleCols(c, lengths[s]).rowwise().sum();
    c += lengths[s];
  }
  const int ia = a.id();
  std::vector<int> lens(lengths.begin(), lengths.end());
  return a.tape().record(OpKind::SegmentSum, std::move(out), {a},
                         [ia, lens = std::move(lens)](Tape& tp, int, const Matrix& g) {
                           Matrix& dst = tp.grad_buffer(ia);
                           Index col = 0;
                           for (std::size_t s = 0; s < lens.size(); ++s) {
                             dst.middleCols(col, lens[s]).colwise() += g.col(static_cast<Index>(s));
                             col += lens[s];
                           }
                         });
}

Var embedding(Var table, std::span<const int> ids) {
  const Matrix& e = table.value();
  Matrix out(e.cols(), static_cast<Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] < 0 || ids[j] >= e.rows()) {
      throw ContractError("embedding: index " + std::to_string(ids[j]) + " outside table " + shape_of(table));
    }
    out.col(static_cast<Index>(j)) = e.row(ids[j]).transpose();
  }
  const int it = table.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return table.tape().record(OpKind::Embedding, std::move(out), {table},
                             [it, rows = std::move(rows)](Tape& tp, int, const Matrix& g) {
                               Matrix& dst = tp.grad_buffer(it);
                               for (std::size_t j = 0; j < rows.size(); ++j) {
                                 dst.row(rows[j]) += g.col(static_cast<Index>(j)).transpose();
                               }
                             });
}

Vector masked_softmax_values(const Vector& v, const Mask& mask) {
  if (static_cast<Index>(mask.size()) != v.size()) {
    throw ShapeError("masked_softmax: mask of length " + std::to_string(mask.size()) + " for vector of length " +
                     std::to_string(v.size()));
  }
  double hi = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < v.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) hi = std::max(hi, v(i));
  }
  if (hi == -std::numeric_limits<double>::infinity()) {
    throw ContractError("masked_softmax: invalid mask, every entry is masked");
  }
  Vector p = Vector::Zero(v.size());
  double z = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    p(i) = std::exp(v(i) - hi);
    z += p(i);
  }
  p /= z;
  return p;
}

Var masked_softmax(Var v, const Mask& mask) {
  if (!is_vector(v)) throw ShapeError("masked_softmax: expected a vector, got " + shape_of(v));
  const Matrix& x = v.value();
  const Vector flat = Eigen::Map<const Vector>(x.data(), x.size());
  Vector p = masked_softmax_values(flat, mask);
  Matrix out = Eigen::Map<const Matrix>(p.data(), x.rows(), x.cols());
  const int iv = v.id();
  return v.tape().record(OpKind::MaskedSoftmax, std::move(out), {v}, [iv](Tape& tp, int self, const Matrix& g) {
    const Matrix& y = tp.value(self);
    const double dot = g.cwiseProduct(y).sum();
    tp.grad_buffer(iv).array() += y.array() * (g.array() - dot);
  });
}

Var nll(Var probabilities, Index index) {
  if (!is_vector(probabilities)) throw ShapeError("nll: expected a vector, got " + shape_of(probabilities));
  const Matrix& p = probabilities.value();
  if (index < 0 || index >= p.size()) {
    throw ContractError("nll: class " + std::to_string(index) + " outside " + shape_of(probabilities));
  }
  const double pi = p(index);
  Matrix out(1, 1);
  out(0, 0) = -std::log(pi);
  const int ip = probabilities.id();
  return probabilities.tape().record(OpKind::Nll, std::move(out), {probabilities},
                                     [ip, index, pi](Tape& tp, int, const Matrix& g) {
                                       tp.grad_buffer(ip)(index) -= g(0, 0) / pi;
                                     });
}

Var transpose(Var a) {
  const int ia = a.id();
  return a.tape().record(OpKind::Transpose, a.value().transpose(), {a}, [ia](Tape& tp, int, const Matrix& g) {
    tp.grad_buffer(ia) += g.transpose();
  });
}

}  // namespace factscribe
