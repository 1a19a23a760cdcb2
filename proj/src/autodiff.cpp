#include "glt/autodiff.hpp"

#include <cmath>
#include <string>

#include "glt/error.hpp"

namespace glt {

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::leaf(Tensor& t) {
  Node node;
  node.view = &t.value;
  node.leaf = &t;
  node.needs_grad = t.requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix m) {
  Node node;
  node.value = std::move(m);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant_view(const Matrix& m) {
  Node node;
  node.view = &m;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.view ? *n.view : n.value;
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    const Matrix& v = value(id);
    n.grad.setZero(v.rows(), v.cols());
  }
  return n.grad;
}

Var Tape::record(Matrix value, std::initializer_list<std::size_t> inputs, BackwardFn backward) {
  if (consumed_) throw Error(ErrorCode::InvalidArgument, "tape already consumed by backward()");
  if (!value.allFinite()) throw Error(ErrorCode::NonFinite, "op produced NaN/Inf");
  Node node;
  node.value = std::move(value);
  for (std::size_t in : inputs) node.needs_grad = node.needs_grad || nodes_[in].needs_grad;
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(const Var& loss) {
  if (consumed_) throw Error(ErrorCode::InvalidArgument, "tape already consumed by backward()");
  if (&loss.tape() != this) throw Error(ErrorCode::InvalidArgument, "loss recorded on another tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw Error(ErrorCode::ShapeMismatch, "backward() needs a scalar loss");
  consumed_ = true;
  grad(loss.id())(0, 0) = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      // Inputs always have smaller ids, so grad(n) is final here.
      n.backward(*this, n.grad);
    }
  }
  for (Node& n : nodes_) {
    if (!n.leaf || !n.needs_grad) continue;
    if (n.grad.size() != 0) {
      if (!n.grad.allFinite()) throw Error(ErrorCode::NonFinite, "gradient contains NaN/Inf");
      n.leaf->grad += n.grad;
    }
    n.leaf->backwarded = true;
  }
}

namespace ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

std::string shape(const Var& v) { return std::to_string(v.rows()) + "x" + std::to_string(v.cols()); }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul " + shape(a) + " * " + shape(b));
  Matrix out = a.value() * b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.needs_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add " + shape(a) + " + " + shape(b));
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.grad(ia) += g;
    if (t.needs_grad(ib)) t.grad(ib) += g;
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul " + shape(a) + " .* " + shape(b));
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.grad(ia) += g.cwiseProduct(t.value(ib));
    if (t.needs_grad(ib)) t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

Var scale(const Var& a, double s) {
  const auto ia = a.id();
  return a.tape().record(a.value() * s, {ia}, [ia, s](Tape& t, const Matrix& g) { t.grad(ia) += s * g; });
}

Var relu(const Var& a) {
  const auto ia = a.id();
  return a.tape().record(a.value().cwiseMax(0.0), {ia}, [ia](Tape& t, const Matrix& g) {
    t.grad(ia) += (t.value(ia).array() > 0.0).select(g, 0.0);
  });
}

Var row_softmax(const Var& a) {
  Matrix y = a.value();
  for (Index i = 0; i < y.rows(); ++i) {
    const double m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  const auto ia = a.id();
  Matrix saved = y;
  return a.tape().record(std::move(y), {ia}, [ia, y = std::move(saved)](Tape& t, const Matrix& g) {
    const Vector dots = g.cwiseProduct(y).rowwise().sum();
    t.grad(ia) += y.cwiseProduct(g - dots.replicate(1, g.cols()));
  });
}

Var sum(const Var& a) {
  const auto ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), {ia}, [ia](Tape& t, const Matrix& g) { t.grad(ia).array() += g(0, 0); });
}

Var sparse_matmul(const SparseMatrix& s, const Var& b) {
  require(s.cols() == b.rows(), "sparse_matmul " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) + " * " +
                                    shape(b));
  Matrix out = s * b.value();
  const auto ib = b.id();
  const SparseMatrix* sp = &s;
  return b.tape().record(std::move(out), {ib}, [sp, ib](Tape& t, const Matrix& g) {
    t.grad(ib).noalias() += sp->transpose() * g;
  });
}

Var masked_spmm(const Adjacency& adj, const Var& edge_mask, const Var& h) {
  require(edge_mask.rows() == adj.num_edges() && edge_mask.cols() == 1, "edge mask " + shape(edge_mask));
  require(h.rows() == adj.num_nodes(), "masked_spmm rows " + shape(h));
  const Matrix& x = h.value();
  const Matrix& m = edge_mask.value();
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  const auto& edges = adj.edges();
  for (Index e = 0; e < adj.num_edges(); ++e) {
    const auto [u, v] = edges[e];
    out.row(u) += m(e, 0) * x.row(v);
    out.row(v) += m(e, 0) * x.row(u);
  }
  const Adjacency* ap = &adj;
  const auto im = edge_mask.id(), ih = h.id();
  return h.tape().record(std::move(out), {im, ih}, [ap, im, ih](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ih);
    const Matrix& m = t.value(im);
    const auto& edges = ap->edges();
    if (t.needs_grad(im)) {
      Matrix& gm = t.grad(im);
      for (Index e = 0; e < ap->num_edges(); ++e) {
        const auto [u, v] = edges[e];
        gm(e, 0) += g.row(u).dot(x.row(v)) + g.row(v).dot(x.row(u));
      }
    }
    if (t.needs_grad(ih)) {
      Matrix& gh = t.grad(ih);
      for (Index e = 0; e < ap->num_edges(); ++e) {
        const auto [u, v] = edges[e];
        gh.row(v) += m(e, 0) * g.row(u);
        gh.row(u) += m(e, 0) * g.row(v);
      }
    }
  });
}

Var gcn_propagate(const Adjacency& adj, const Var& edge_mask, const Var& h, bool grad_through_degree) {
  require(edge_mask.rows() == adj.num_edges() && edge_mask.cols() == 1, "edge mask " + shape(edge_mask));
  require(h.rows() == adj.num_nodes(), "gcn_propagate rows " + shape(h));
  const Matrix& x = h.value();
  const Matrix& m = edge_mask.value();
  const auto& edges = adj.edges();
  const Index n = adj.num_nodes();

  Vector deg = Vector::Ones(n);
  for (Index e = 0; e < adj.num_edges(); ++e) {
    deg(edges[e].u) += m(e, 0);
    deg(edges[e].v) += m(e, 0);
  }
  Vector s = deg.array().rsqrt();

  Matrix out = (s.array().square()).matrix().asDiagonal() * x;
  for (Index e = 0; e < adj.num_edges(); ++e) {
    const auto [u, v] = edges[e];
    const double w = m(e, 0) * s(u) * s(v);
    out.row(u) += w * x.row(v);
    out.row(v) += w * x.row(u);
  }

  const Adjacency* ap = &adj;
  const auto im = edge_mask.id(), ih = h.id();
  return h.tape().record(
      std::move(out), {im, ih}, [ap, im, ih, s = std::move(s), grad_through_degree](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ih);
        const Matrix& m = t.value(im);
        const auto& edges = ap->edges();
        const Index num_edges = ap->num_edges();
        if (t.needs_grad(ih)) {
          Matrix& gh = t.grad(ih);
          gh += s.array().square().matrix().asDiagonal() * g;
          for (Index e = 0; e < num_edges; ++e) {
            const auto [u, v] = edges[e];
            const double w = m(e, 0) * s(u) * s(v);
            gh.row(v) += w * g.row(u);
            gh.row(u) += w * g.row(v);
          }
        }
        if (!t.needs_grad(im)) return;
        Matrix& gm = t.grad(im);
        // ds accumulates dL/ds_i where s_i = deg_i^{-1/2}.
        Vector ds = Vector::Zero(s.size());
        if (grad_through_degree) ds = 2.0 * s.cwiseProduct(g.cwiseProduct(x).rowwise().sum());
        for (Index e = 0; e < num_edges; ++e) {
          const auto [u, v] = edges[e];
          const double c = g.row(u).dot(x.row(v)) + g.row(v).dot(x.row(u));
          gm(e, 0) += s(u) * s(v) * c;
          if (grad_through_degree) {
            ds(u) += m(e, 0) * s(v) * c;
            ds(v) += m(e, 0) * s(u) * c;
          }
        }
        if (!grad_through_degree) return;
        const Vector ddeg = -0.5 * ds.cwiseProduct(s.array().cube().matrix());
        for (Index e = 0; e < num_edges; ++e) gm(e, 0) += ddeg(edges[e].u) + ddeg(edges[e].v);
      });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels, std::span<const Index> index_set) {
  if (index_set.empty()) throw Error(ErrorCode::EmptyIndexSet, "cross-entropy over an empty index set");
  require(static_cast<Index>(labels.size()) == logits.rows(), "labels length vs logits " + shape(logits));
  const Matrix& z = logits.value();
  const Index c = z.cols();
  // Rows of softmax(z) for the selected nodes, kept for backward.
  Matrix probs(static_cast<Index>(index_set.size()), c);
  double total = 0.0;
  for (std::size_t k = 0; k < index_set.size(); ++k) {
    const Index i = index_set[k];
    if (i < 0 || i >= z.rows()) throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(i));
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw Error(ErrorCode::IndexOutOfRange, "label " + std::to_string(y));
    const double mx = z.row(i).maxCoeff();
    const auto shifted = (z.row(i).array() - mx).exp();
    const double norm = shifted.sum();
    probs.row(static_cast<Index>(k)) = shifted / norm;
    total += std::log(norm) + mx - z(i, y);
  }
  const double inv = 1.0 / static_cast<double>(index_set.size());
  Matrix out(1, 1);
  out(0, 0) = total * inv;

  std::vector<Index> idx(index_set.begin(), index_set.end());
  std::vector<int> ys;
  ys.reserve(idx.size());
  for (Index i : idx) ys.push_back(labels[static_cast<std::size_t>(i)]);
  const auto il = logits.id();
  return logits.tape().record(std::move(out), {il},
                              [il, idx = std::move(idx), ys = std::move(ys), probs = std::move(probs), inv](
                                  Tape& t, const Matrix& g) {
                                Matrix& gz = t.grad(il);
                                const double scale = g(0, 0) * inv;
                                for (std::size_t k = 0; k < idx.size(); ++k) {
                                  gz.row(idx[k]) += scale * probs.row(static_cast<Index>(k));
                                  gz(idx[k], ys[k]) -= scale;
                                }
                              });
}

}  // namespace ad

}  // namespace glt
