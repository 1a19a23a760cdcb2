#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glt/types.hpp"

namespace glt {

struct Edge {
  Index u = 0;
  Index v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Ordinal into the canonical undirected edge array.
struct EdgeId {
  Index index = 0;
  friend bool operator==(const EdgeId&, const EdgeId&) = default;
};

/// Undirected simple graph. Each edge is stored once as (u, v) with u < v,
/// sorted lexicographically; a directed CSR view (both directions, edge ids
/// attached) is built for propagation.
class Adjacency {
 public:
  Adjacency() = default;
  /// Edges must already be canonical, sorted and unique.
  Adjacency(Index num_nodes, std::vector<Edge> edges);

  Index num_nodes() const { return num_nodes_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId id) const { return edges_[static_cast<std::size_t>(id.index)]; }

  // Directed CSR: row i lists neighbours j with the undirected edge id of (i, j).
  const std::vector<Index>& offsets() const { return offsets_; }
  const std::vector<Index>& neighbors() const { return neighbors_; }
  const std::vector<Index>& edge_ids() const { return edge_ids_; }
  Index degree(Index node) const { return offsets_[node + 1] - offsets_[node]; }

  /// Dense 0/1 symmetric matrix, zero diagonal.
  Matrix to_dense() const;

  friend bool operator==(const Adjacency& a, const Adjacency& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  Index num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<Index> offsets_{0};
  std::vector<Index> neighbors_;
  std::vector<Index> edge_ids_;
};

struct Splits {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;

  friend bool operator==(const Splits&, const Splits&) = default;
};

enum class Split { Train, Val, Test };

/// Immutable node-classification dataset. The constructor validates every
/// invariant (label range, disjoint sorted splits, shapes).
class GraphDataset {
 public:
  GraphDataset(Index num_classes, Matrix features, Adjacency adjacency, std::vector<int> labels,
               Splits splits);

  Index num_nodes() const { return adjacency_.num_nodes(); }
  Index num_features() const { return features_.cols(); }
  Index num_classes() const { return num_classes_; }
  Index num_edges() const { return adjacency_.num_edges(); }

  const Matrix& features() const { return features_; }
  /// Same values as features(), compressed; used by the forward pass.
  const SparseMatrix& sparse_features() const { return sparse_features_; }
  const Adjacency& adjacency() const { return adjacency_; }
  const std::vector<int>& labels() const { return labels_; }
  const Splits& splits() const { return splits_; }
  const std::vector<Index>& split(Split which) const;

  /// Copy with every feature row scaled to unit L1 norm (zero rows untouched).
  GraphDataset row_normalized() const;

  friend bool operator==(const GraphDataset& a, const GraphDataset& b) {
    return a.num_classes_ == b.num_classes_ && a.features_ == b.features_ &&
           a.adjacency_ == b.adjacency_ && a.labels_ == b.labels_ && a.splits_ == b.splits_;
  }

 private:
  Index num_classes_;
  Matrix features_;
  SparseMatrix sparse_features_;
  Adjacency adjacency_;
  std::vector<int> labels_;
  Splits splits_;
};

struct LoadOptions {
  bool row_normalize_features = false;
};

GraphDataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});
void save_dataset(const GraphDataset& ds, const std::filesystem::path& dir);

/// Canonicalizes raw (possibly reversed) edge pairs. Throws DuplicateEdge with
/// both 1-based positions, or InvalidArgument for self-loops.
std::vector<Edge> canonicalize_edges(Index num_nodes, std::span<const Edge> raw);

struct SbmOptions {
  double noise_std = 1.0;
};

/// Stochastic block model fixture: block-id labels, one-hot(block) + Gaussian
/// noise features, 60/20/20 splits stratified by block.
GraphDataset synth_sbm(Index num_blocks, Index nodes_per_block, double p_in, double p_out, Index d,
                       std::uint64_t seed, const SbmOptions& options = {});

}  // namespace glt
