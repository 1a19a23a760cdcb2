#include "glt/imp.hpp"

#include <algorithm>
#include <cmath>

#include "glt/error.hpp"

namespace glt {

std::size_t prune_count(double ratio, std::size_t active) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "pruning ratio must be in [0, 1)");
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(active) + 1e-9));
}

std::vector<Index> lowest_magnitude(std::span<const double> values, const BitMask& active, std::size_t count) {
  if (values.size() != active.size()) throw Error(ErrorCode::ShapeMismatch, "mask values vs active set size");
  std::vector<Index> candidates = active.ones();
  if (count > candidates.size()) throw Error(ErrorCode::InvalidArgument, "prune count exceeds active set");
  auto less = [&](Index a, Index b) {
    const double ma = std::abs(values[a]), mb = std::abs(values[b]);
    return ma < mb || (ma == mb && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count), candidates.end(), less);
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<Index> random_selection(const BitMask& active, std::size_t count, Rng& rng) {
  std::vector<Index> candidates = active.ones();
  if (count > candidates.size()) throw Error(ErrorCode::InvalidArgument, "prune count exceeds active set");
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

namespace {

std::vector<Index> select(std::span<const double> values, const BitMask& active, double ratio,
                          const PruneOptions& options) {
  const std::size_t count = prune_count(ratio, active.count());
  if (options.selection == Selection::Random) {
    if (!options.rng) throw Error(ErrorCode::InvalidArgument, "random selection needs an rng");
    return random_selection(active, count, *options.rng);
  }
  return lowest_magnitude(values, active, count);
}

void clear_bits(BitMask& mask, const std::vector<Index>& indices, std::size_t offset = 0) {
  for (Index i : indices) mask.set(static_cast<std::size_t>(i) - offset, false);
}

}  // namespace

BinaryMasks prune_masks(const BinaryMasks& active, std::span<const double> edge_values,
                        std::span<const double> weight_values, const PruneRatios& ratios,
                        const PruneOptions& options) {
  BinaryMasks out = active;
  clear_bits(out.adj, select(edge_values, active.adj, ratios.graph, options));

  if (weight_values.size() != active.weight_universe())
    throw Error(ErrorCode::ShapeMismatch, "weight mask values vs universe size");
  if (options.per_layer_pooling) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < active.weights.size(); ++l) {
      const std::size_t size = active.weights[l].size();
      clear_bits(out.weights[l], select(weight_values.subspan(offset, size), active.weights[l], ratios.model, options));
      offset += size;
    }
  } else {
    BitMask flat = active.flat_weights();
    clear_bits(flat, select(weight_values, flat, ratios.model, options));
    out.set_flat_weights(flat);
  }

  if (out.adj.size() > 0 && !out.adj.any()) throw Error(ErrorCode::EmptyActiveSet, "pruning would remove every edge");
  if (out.weight_universe() > 0 && out.weight_count() == 0)
    throw Error(ErrorCode::EmptyActiveSet, "pruning would remove every weight");
  return out;
}

PruneResult magnitude_prune(const GraphDataset& ds, ModelState& model, const BinaryMasks& active,
                            const PruneRatios& ratios, const TrainConfig& cfg, const PruneOptions& options) {
  PruneResult result;
  result.soft = SoftMasks::ones_on(active, model);
  if (options.selection == Selection::Magnitude) {
    result.trace = train(ds, model, result.soft, cfg, /*train_weights=*/true, /*train_masks=*/true).trace;
  }
  const Vector edge_values = result.soft.adj_values();
  const Vector weight_values = result.soft.flat_weight_values();
  result.binary = prune_masks(active, std::span<const double>(edge_values.data(), edge_values.size()),
                              std::span<const double>(weight_values.data(), weight_values.size()), ratios, options);
  return result;
}

}  // namespace glt
