#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glt/gnn.hpp"

namespace glt {

struct Sparsity {
  double graph = 0.0;
  double model = 0.0;
};

/// 1 - popcount/universe on each side (0 for an empty universe).
Sparsity sparsity(const BinaryMasks& binary);

/// Multiply-accumulates of one full-graph inference under the masks:
/// per layer, (2·active_edges + n)·out_dim for aggregation (self-loops are
/// never pruned) plus n·nnz(W ⊙ M_W) for the feature transform.
std::uint64_t inference_macs(const BinaryMasks& binary, const GraphDataset& ds, const ModelState& model);

/// Trained soft-mask magnitudes of one pruning stage.
struct MaskSnapshot {
  Vector edge_values;
  Vector weight_values;  // flat, layer order
  double graph_sparsity = 0.0;
  double model_sparsity = 0.0;
};

struct StageSummary {
  double stage_sparsity = 0.0;
  double q10 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double mean = 0.0;
};

/// Rank drift of the winning ticket's elements. values(s, k) is the
/// fluctuation of the k-th winning element at stage s:
/// nrank_final - nrank_s, nrank = ascending |value| rank / universe size.
/// Positive means the element ranked lower (less important) at stage s.
struct FluctuationProfile {
  std::vector<double> graph_sparsities;
  std::vector<double> model_sparsities;
  std::vector<Index> edge_elements;
  std::vector<Index> weight_elements;
  Matrix edge_values;
  Matrix weight_values;
  std::vector<StageSummary> edge_summary;
  std::vector<StageSummary> weight_summary;
};

/// Normalized ascending ranks, ties by index: rank / values.size().
Vector normalized_ranks(const Vector& values);

/// Linear-interpolation quantile (numpy's default), q in [0, 1].
double quantile(std::vector<double> values, double q);

/// The last stage is the reference ("final") stage.
FluctuationProfile fluctuation(const std::vector<MaskSnapshot>& stages, const BinaryMasks& winner);

std::string fluctuation_to_csv(const FluctuationProfile& profile);

}  // namespace glt
