#include "glt/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "glt/error.hpp"

namespace glt {

Sparsity sparsity(const BinaryMasks& binary) {
  auto side = [](std::size_t kept, std::size_t universe) {
    return universe == 0 ? 0.0 : 1.0 - static_cast<double>(kept) / static_cast<double>(universe);
  };
  return {side(binary.adj.count(), binary.adj.size()), side(binary.weight_count(), binary.weight_universe())};
}

std::uint64_t inference_macs(const BinaryMasks& binary, const GraphDataset& ds, const ModelState& model) {
  if (binary.weights.size() != model.layers.size()) throw Error(ErrorCode::ShapeMismatch, "mask/layer count");
  const auto n = static_cast<std::uint64_t>(ds.num_nodes());
  const auto edges = static_cast<std::uint64_t>(binary.adj.count());
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto out_dim = static_cast<std::uint64_t>(model.layers[l].value.cols());
    total += (2 * edges + n) * out_dim;
    total += n * static_cast<std::uint64_t>(binary.weights[l].count());
  }
  return total;
}

Vector normalized_ranks(const Vector& values) {
  const Index n = values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double va = std::abs(values(a)), vb = std::abs(values(b));
    return va < vb || (va == vb && a < b);
  });
  Vector ranks(n);
  for (Index r = 0; r < n; ++r) ranks(order[r]) = static_cast<double>(r) / static_cast<double>(n);
  return ranks;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

StageSummary summarize(const Matrix& values, Index stage, double sparsity_value) {
  std::vector<double> row(values.row(stage).data(), values.row(stage).data() + values.cols());
  StageSummary s;
  s.stage_sparsity = sparsity_value;
  if (row.empty()) return s;
  s.q10 = quantile(row, 0.10);
  s.q50 = quantile(row, 0.50);
  s.q90 = quantile(row, 0.90);
  s.mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
  return s;
}

Matrix side_fluctuation(const std::vector<Vector>& stage_values, const std::vector<Index>& elements) {
  const auto stages = static_cast<Index>(stage_values.size());
  std::vector<Vector> ranks;
  ranks.reserve(stage_values.size());
  for (const auto& v : stage_values) ranks.push_back(normalized_ranks(v));
  const Vector& final_ranks = ranks.back();
  Matrix out(stages, static_cast<Index>(elements.size()));
  for (Index s = 0; s < stages; ++s)
    for (std::size_t k = 0; k < elements.size(); ++k)
      out(s, static_cast<Index>(k)) = final_ranks(elements[k]) - ranks[s](elements[k]);
  return out;
}

}  // namespace

FluctuationProfile fluctuation(const std::vector<MaskSnapshot>& stages, const BinaryMasks& winner) {
  if (stages.empty()) throw Error(ErrorCode::InvalidArgument, "fluctuation needs at least one stage");
  std::vector<Vector> edge_values, weight_values;
  FluctuationProfile p;
  for (const auto& s : stages) {
    if (static_cast<std::size_t>(s.edge_values.size()) != winner.adj.size() ||
        static_cast<std::size_t>(s.weight_values.size()) != winner.weight_universe())
      throw Error(ErrorCode::UniverseMismatch, "stage snapshot does not cover the winner's universe");
    edge_values.push_back(s.edge_values);
    weight_values.push_back(s.weight_values);
    p.graph_sparsities.push_back(s.graph_sparsity);
    p.model_sparsities.push_back(s.model_sparsity);
  }
  p.edge_elements = winner.adj.ones();
  p.weight_elements = winner.flat_weights().ones();
  p.edge_values = side_fluctuation(edge_values, p.edge_elements);
  p.weight_values = side_fluctuation(weight_values, p.weight_elements);
  for (Index s = 0; s < static_cast<Index>(stages.size()); ++s) {
    p.edge_summary.push_back(summarize(p.edge_values, s, p.graph_sparsities[s]));
    p.weight_summary.push_back(summarize(p.weight_values, s, p.model_sparsities[s]));
  }
  return p;
}

std::string fluctuation_to_csv(const FluctuationProfile& profile) {
  std::ostringstream out;
  out.precision(17);
  out << "stage_sparsity,side,q10,q50,q90,mean\n";
  auto emit = [&](const std::vector<StageSummary>& rows, const char* side) {
    for (const auto& r : rows)
      out << r.stage_sparsity << ',' << side << ',' << r.q10 << ',' << r.q50 << ',' << r.q90 << ',' << r.mean << '\n';
  };
  emit(profile.edge_summary, "edge");
  emit(profile.weight_summary, "weight");
  return out.str();
}

}  // namespace glt
