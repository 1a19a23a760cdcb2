#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's math; only plain Eigen dense algebra.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "glt/dataset.hpp"
#include "glt/gnn.hpp"

namespace glt::test {

inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 salt(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("glt_test_" + name + "_" + std::to_string(salt()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Dense symmetric A ⊙ M from per-edge mask values.
inline Matrix dense_masked_adjacency(const Adjacency& adj, const Vector& edge_mask) {
  Matrix a = Matrix::Zero(adj.num_nodes(), adj.num_nodes());
  for (Index e = 0; e < adj.num_edges(); ++e) {
    const Edge& ed = adj.edges()[static_cast<std::size_t>(e)];
    a(ed.u, ed.v) = edge_mask[e];
    a(ed.v, ed.u) = edge_mask[e];
  }
  return a;
}

/// D^{-1/2}(A⊙M + I)D^{-1/2}, D = rowsum(A⊙M) + 1.
inline Matrix dense_gcn_operator(const Adjacency& adj, const Vector& edge_mask) {
  Matrix a = dense_masked_adjacency(adj, edge_mask);
  a += Matrix::Identity(a.rows(), a.cols());
  Vector d = a.rowwise().sum();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) a(i, j) /= std::sqrt(d[i] * d[j]);
  return a;
}

/// Dense forward of the two-layer model with soft masks.
inline Matrix dense_forward(const GraphDataset& ds, Backbone backbone, double gin_eps, const std::vector<Matrix>& w,
                            const Vector& edge_mask, const std::vector<Matrix>& wm) {
  const Matrix w0 = w[0].cwiseProduct(wm[0]);
  const Matrix w1 = w[1].cwiseProduct(wm[1]);
  Matrix op;
  if (backbone == Backbone::GCN) {
    op = dense_gcn_operator(ds.adjacency(), edge_mask);
  } else {
    op = dense_masked_adjacency(ds.adjacency(), edge_mask);
    op += (1.0 + gin_eps) * Matrix::Identity(op.rows(), op.cols());
  }
  Matrix h = op * ds.features() * w0;
  h = h.cwiseMax(0.0);
  return op * h * w1;
}

inline double dense_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                  const std::vector<Index>& rows) {
  double total = 0.0;
  for (Index i : rows) {
    const double m = logits.row(i).maxCoeff();
    double z = 0.0;
    for (Index c = 0; c < logits.cols(); ++c) z += std::exp(logits(i, c) - m);
    total += -(logits(i, labels[static_cast<std::size_t>(i)]) - m - std::log(z));
  }
  return total / static_cast<double>(rows.size());
}

/// CE + λ1 Σ|M_A| + λ2 Σ|M_W|, computed densely.
inline double dense_loss(const GraphDataset& ds, Backbone backbone, double gin_eps, const std::vector<Matrix>& w,
                         const Vector& edge_mask, const std::vector<Matrix>& wm, double lambda1, double lambda2) {
  const Matrix logits = dense_forward(ds, backbone, gin_eps, w, edge_mask, wm);
  double l1w = 0.0;
  for (const auto& m : wm) l1w += m.cwiseAbs().sum();
  return dense_cross_entropy(logits, ds.labels(), ds.splits().train) + lambda1 * edge_mask.cwiseAbs().sum() +
         lambda2 * l1w;
}

/// Small random graph with every node in some split.
inline GraphDataset random_graph(Index n, Index d, Index classes, double p_edge, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Edge> edges;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v)
      if (unif(gen) < p_edge) edges.push_back({u, v});
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = normal(gen);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
  Splits s;
  for (Index i = 0; i < n; ++i) {
    if (i % 4 == 3) s.test.push_back(i);
    else if (i % 4 == 2) s.val.push_back(i);
    else s.train.push_back(i);
  }
  return GraphDataset(classes, std::move(x), Adjacency(n, std::move(edges)), std::move(labels), std::move(s));
}

}  // namespace glt::test
