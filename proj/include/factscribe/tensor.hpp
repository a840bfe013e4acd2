// SPDX-License-Identifier: Apache-2.0
//
// Dense 64-bit tensors with tape-based reverse-mode differentiation.
//
// Every array is a 2-D Eigen matrix; vectors are single columns. A Tape
// records the primitives applied during one forward pass. Learnable state
// lives in Tensor objects that outlive tapes: a leaf node refers to the
// tensor's storage without copying it, and backward() accumulates straight
// into Tensor::grad().
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace factscribe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Mask = std::vector<bool>;

std::string shape_string(Index rows, Index cols);

/// A named array that can take part in differentiation.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::string name, Matrix value, bool requires_grad = true);

  const std::string& name() const noexcept { return name_; }
  bool requires_grad() const noexcept { return requires_grad_; }

  const Matrix& value() const noexcept { return value_; }
  Matrix& value() noexcept { return value_; }
  const Matrix& grad() const noexcept { return grad_; }
  Matrix& grad() noexcept { return grad_; }

  Index rows() const noexcept { return value_.rows(); }
  Index cols() const noexcept { return value_.cols(); }
  Index size() const noexcept { return value_.size(); }
  std::vector<Index> shape() const { return {value_.rows(), value_.cols()}; }

  void zero_grad();

 private:
  std::string name_;
  Matrix value_;
  Matrix grad_;
  bool requires_grad_ = false;
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape& tape() const;
  int id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class OpKind : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  AddColumn,
  Tanh,
  Sigmoid,
  Relu,
  VConcat,
  HConcat,
  SliceRows,
  SliceCols,
  Sum,
  RowMean,
  SegmentSum,
  Embedding,
  MaskedSoftmax,
  Nll,
  Transpose,
};

const char* op_name(OpKind kind) noexcept;

class Tape {
 public:
  // Receives the tape, the id of the node being differentiated and its gradient.
  using BackwardFn = std::function<void(Tape&, int self, const Matrix& grad_out)>;

  /// With record_gradients=false no backward closures are kept; use for inference.
  explicit Tape(bool record_gradients = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool records_gradients() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var leaf(Tensor& tensor);
  Var leaf(const Tensor& tensor);
  Var constant(Matrix value);

  /// Reverse sweep from a 1x1 node. `seed` scales every accumulated gradient.
  void backward(Var loss, double seed = 1.0);

  OpKind kind(int id) const { return nodes_.at(static_cast<std::size_t>(id)).kind; }
  const std::vector<int>& inputs(int id) const {
    return nodes_.at(static_cast<std::size_t>(id)).inputs;
  }

  // Interface used by primitives.
  Var record(OpKind kind, Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(OpKind kind, Matrix value, std::span<const Var> inputs, BackwardFn fn);
  const Matrix& value(int id) const;
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  Matrix& grad_buffer(int id);

 private:
  struct Node {
    OpKind kind = OpKind::Constant;
    Matrix value;
    const Matrix* external = nullptr;
    Tensor* param = nullptr;
    std::vector<int> inputs;
    BackwardFn backward;
    Matrix grad;
    bool needs_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool record_;
};

// Primitives. Each checks shapes, computes the forward value and, when any
// input needs a gradient, records its vector-Jacobian product.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Adds column vector `v` to every column of `m`.
Var add_column(Var m, Var v);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var vconcat(std::span<const Var> parts);
Var vconcat(std::initializer_list<Var> parts);
Var hconcat(std::span<const Var> parts);
Var hconcat(std::initializer_list<Var> parts);
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
inline Var column(Var a, Index j) { return slice_cols(a, j, 1); }
Var sum(Var a);
/// Mean over columns: rows x 1.
Var row_mean(Var a);
/// Sums consecutive groups of columns; group g has lengths[g] columns.
Var segment_sum(Var a, std::span<const int> lengths);
/// Gathers table rows as columns: table.cols() x ids.size().
Var embedding(Var table, std::span<const int> ids);
/// Softmax over a vector restricted to entries where mask is true. Masked
/// entries are exactly zero.
Var masked_softmax(Var v, const Mask& mask);
/// -log p[index] for a probability vector p.
Var nll(Var probabilities, Index index);

Var transpose(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

/// Dense masked softmax on plain values, shared by the primitive and by tests.
Vector masked_softmax_values(const Vector& v, const Mask& mask);

}  // namespace factscribe
