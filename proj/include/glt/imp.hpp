#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glt/gnn.hpp"
#include "glt/rng.hpp"

namespace glt {

/// Per-round pruning fractions, applied to the currently active set.
struct PruneRatios {
  double graph = 0.05;  // p_A
  double model = 0.20;  // p_W

  friend bool operator==(const PruneRatios&, const PruneRatios&) = default;
};

enum class Selection { Magnitude, Random };

struct PruneOptions {
  /// Quantile per layer instead of pooled across layers.
  bool per_layer_pooling = false;
  Selection selection = Selection::Magnitude;
  /// Required for Selection::Random.
  Rng* rng = nullptr;
};

struct PruneResult {
  BinaryMasks binary;
  SoftMasks soft;
  TrainTrace trace;
};

/// ⌊ratio · active⌋, with a 1e-9 guard against representation error
/// (0.29 · 100 counts as 29).
std::size_t prune_count(double ratio, std::size_t active);

/// The `count` active entries of smallest |value|; ties by ascending index.
/// Result sorted ascending.
std::vector<Index> lowest_magnitude(std::span<const double> values, const BitMask& active, std::size_t count);

/// `count` active entries chosen uniformly without replacement, sorted.
std::vector<Index> random_selection(const BitMask& active, std::size_t count, Rng& rng);

/// Binarization step alone: zero the selected fraction of active entries of
/// each universe given trained mask magnitudes (weights flattened across layers).
BinaryMasks prune_masks(const BinaryMasks& active, std::span<const double> edge_values,
                        std::span<const double> weight_values, const PruneRatios& ratios,
                        const PruneOptions& options = {});

/// One invocation of magnitude pruning: soft masks start at 1 on the active
/// set, weights and masks train jointly for cfg.epochs starting from the
/// model's current weights, then the lowest-magnitude fractions are removed.
/// Random selection skips the training phase.
PruneResult magnitude_prune(const GraphDataset& ds, ModelState& model, const BinaryMasks& active,
                            const PruneRatios& ratios, const TrainConfig& cfg, const PruneOptions& options = {});

}  // namespace glt
