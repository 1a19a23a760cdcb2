#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "glt/dataset.hpp"
#include "glt/types.hpp"

namespace glt {

/// Trainable leaf: values plus a same-shape gradient accumulator.
struct Tensor {
  Tensor() = default;
  explicit Tensor(Matrix v, bool requires_grad_ = true)
      : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), requires_grad(requires_grad_) {}

  void zero_grad() {
    grad.setZero(value.rows(), value.cols());
    backwarded = false;
  }

  Matrix value;
  Matrix grad;
  bool requires_grad = true;
  /// Set by Tape::backward, cleared by the optimizer step.
  bool backwarded = false;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of primitive ops. backward() walks it in exact reverse
/// recording order, once; after that the tape is spent.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Gradients reaching this var accumulate into t.grad.
  Var leaf(Tensor& t);
  Var constant(Matrix m);
  /// Constant that aliases caller-owned storage; m must outlive the tape.
  Var constant_view(const Matrix& m);

  void backward(const Var& loss);
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

  // Op-author interface.
  const Matrix& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Zero-initialized on first touch.
  Matrix& grad(std::size_t id);
  Var record(Matrix value, std::initializer_list<std::size_t> inputs, BackwardFn backward);

 private:
  struct Node {
    Matrix value;
    const Matrix* view = nullptr;
    Tensor* leaf = nullptr;
    Matrix grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

namespace ad {

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// Elementwise (Hadamard) product.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& a);
Var row_softmax(const Var& a);
/// Sum of all entries, as a 1x1.
Var sum(const Var& a);

/// s * b for a constant sparse s; s must outlive the tape.
Var sparse_matmul(const SparseMatrix& s, const Var& b);

/// (A ⊙ M) h where M holds one value per undirected edge (num_edges x 1),
/// applied to both directions.
Var masked_spmm(const Adjacency& adj, const Var& edge_mask, const Var& h);

/// Â(M) h with Â(M) = D^{-1/2} (A ⊙ M + I) D^{-1/2}, D = rowsum(A ⊙ M) + 1.
/// With grad_through_degree=false the degree is treated as a constant.
Var gcn_propagate(const Adjacency& adj, const Var& edge_mask, const Var& h, bool grad_through_degree = true);

/// Mean softmax cross-entropy over the rows in index_set.
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels, std::span<const Index> index_set);

}  // namespace ad

}  // namespace glt
