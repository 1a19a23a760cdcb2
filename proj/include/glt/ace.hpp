#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glt/gnn.hpp"
#include "glt/rng.hpp"

namespace glt {

struct AceConfig {
  int rounds = 3;  // T
  /// Sampling budget K per universe; nullopt = ⌈10%⌉ of that universe's pruned side.
  std::optional<std::size_t> k_init;
  double similarity_threshold = 0.5;
  int refine_epochs = 30;
  /// Truncate the larger swap set to the smaller one's size (sparsity-neutral rounds).
  bool equalize_swap = true;
  /// When the similarity gate trips, fall back to the masks the previous
  /// round started from and redraw there.
  bool resample = true;
  /// Halve K when the similarity gate trips.
  bool adaptive_k = true;

  friend bool operator==(const AceConfig&, const AceConfig&) = default;
};

enum class Direction {
  /// score = log|m| + g: favours large magnitudes (pruned side).
  Most,
  /// score = -log|m| + g: favours small magnitudes (retained side).
  Least,
};

/// One distinct sampled candidate and the best perturbed score it drew.
struct Draw {
  Index index = 0;
  double score = 0.0;
};

/// k independent Gumbel-max draws over `magnitudes`, deduplicated.
/// Returned sorted by index; magnitudes are clamped below at 1e-12.
std::vector<Draw> gumbel_sample(std::span<const double> magnitudes, std::size_t k, Direction direction, Rng& rng);

/// Indicator sets over the two universes, as sorted element indices.
/// Weight indices are flat (layer 0 row-major, then layer 1).
struct SwapSets {
  std::vector<Index> omega_retained;
  std::vector<Index> omega_pruned;
  std::vector<Index> alpha_retained;
  std::vector<Index> alpha_pruned;
};

/// M ⊕ retained ⊕ pruned for one universe. Throws SetViolation when a
/// retained index points at a 0 bit or a pruned index at a 1 bit.
BitMask swap_bits(const BitMask& mask, const std::vector<Index>& retained, const std::vector<Index>& pruned);
BinaryMasks swap(const BinaryMasks& binary, const SwapSets& sets);

/// Cosine similarity of two 0/1 indicator vectors given as index sets:
/// |a ∩ b| / sqrt(|a| |b|), 0 when either is empty.
double similarity(const std::vector<Index>& a, const std::vector<Index>& b);
double similarity(const BitMask& a, const BitMask& b);

/// ⌈10% of pruned_count⌉, at least 1.
std::size_t auto_k(std::size_t pruned_count);

struct AceTraceRow {
  int round = 0;
  std::size_t k_edges = 0;
  std::size_t k_weights = 0;
  std::size_t kprime_ret_w = 0;
  std::size_t kprime_pr_w = 0;
  std::size_t kprime_ret_e = 0;
  std::size_t kprime_pr_e = 0;
  double sim_w = 0.0;
  double sim_e = 0.0;
  bool halved = false;
  bool resampled = false;
  std::size_t swapped_w = 0;
  std::size_t swapped_e = 0;

  friend bool operator==(const AceTraceRow&, const AceTraceRow&) = default;
};

struct AceResult {
  BinaryMasks masks;
  std::vector<AceTraceRow> trace;
};

/// Adversarial refinement of a ticket. Each round trains the retained and the
/// pruned substructure from W_init with fresh soft masks, samples swap sets
/// by Gumbel-max on the trained magnitudes, and exchanges them.
AceResult ace_refine(const GraphDataset& ds, const ModelState& model, const BinaryMasks& binary, const AceConfig& cfg,
                     const TrainConfig& train_cfg, Rng& rng);

std::string ace_trace_to_csv(const std::vector<AceTraceRow>& trace);

}  // namespace glt
