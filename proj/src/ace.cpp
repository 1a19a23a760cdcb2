#include "glt/ace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "glt/error.hpp"

namespace glt {

namespace {

// Above this many score evaluations the categorical route is used. The argmax
// of (s_i + G_i) is distributed as Categorical(softmax(s)) and the max itself
// as log Σ exp(s_i) + G, independent of the argmax, so both routes draw from
// the same joint law.
constexpr double kExplicitBudget = 4e6;

void record_draw(std::map<Index, double>& picked, Index index, double score) {
  auto [it, inserted] = picked.emplace(index, score);
  if (!inserted) it->second = std::max(it->second, score);
}

}  // namespace

std::vector<Draw> gumbel_sample(std::span<const double> magnitudes, std::size_t k, Direction direction, Rng& rng) {
  if (magnitudes.empty()) throw Error(ErrorCode::EmptyCandidateSet, "gumbel_sample over no candidates");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "gumbel_sample needs k >= 1");
  const double sign = direction == Direction::Most ? 1.0 : -1.0;
  std::vector<double> log_scores(magnitudes.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i)
    log_scores[i] = sign * std::log(std::max(std::abs(magnitudes[i]), 1e-12));

  std::map<Index, double> picked;
  if (static_cast<double>(k) * static_cast<double>(magnitudes.size()) <= kExplicitBudget) {
    for (std::size_t draw = 0; draw < k; ++draw) {
      Index best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < log_scores.size(); ++i) {
        const double s = log_scores[i] + rng.gumbel();
        if (s > best_score) {
          best_score = s;
          best = static_cast<Index>(i);
        }
      }
      record_draw(picked, best, best_score);
    }
  } else {
    const double top = *std::max_element(log_scores.begin(), log_scores.end());
    std::vector<double> cumulative(log_scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < log_scores.size(); ++i) {
      total += std::exp(log_scores[i] - top);
      cumulative[i] = total;
    }
    const double log_partition = top + std::log(total);
    for (std::size_t draw = 0; draw < k; ++draw) {
      const double u = rng.uniform() * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      if (it == cumulative.end()) --it;
      record_draw(picked, static_cast<Index>(it - cumulative.begin()), log_partition + rng.gumbel());
    }
  }

  std::vector<Draw> out;
  out.reserve(picked.size());
  for (const auto& [index, score] : picked) out.push_back({index, score});
  return out;
}

BitMask swap_bits(const BitMask& mask, const std::vector<Index>& retained, const std::vector<Index>& pruned) {
  BitMask out = mask;
  for (Index i : retained) {
    if (i < 0 || static_cast<std::size_t>(i) >= mask.size() || !out.test(static_cast<std::size_t>(i)))
      throw Error(ErrorCode::SetViolation, "retained-side index " + std::to_string(i) + " is not a retained bit");
    out.flip(static_cast<std::size_t>(i));
  }
  for (Index i : pruned) {
    if (i < 0 || static_cast<std::size_t>(i) >= mask.size() || mask.test(static_cast<std::size_t>(i)) ||
        out.test(static_cast<std::size_t>(i)))
      throw Error(ErrorCode::SetViolation, "pruned-side index " + std::to_string(i) + " is not a pruned bit");
    out.flip(static_cast<std::size_t>(i));
  }
  return out;
}

BinaryMasks swap(const BinaryMasks& binary, const SwapSets& sets) {
  BinaryMasks out = binary;
  out.adj = swap_bits(binary.adj, sets.alpha_retained, sets.alpha_pruned);
  out.set_flat_weights(swap_bits(binary.flat_weights(), sets.omega_retained, sets.omega_pruned));
  return out;
}

double similarity(const std::vector<Index>& a, const std::vector<Index>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<Index> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  std::vector<Index> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / std::sqrt(static_cast<double>(sa.size()) * static_cast<double>(sb.size()));
}

double similarity(const BitMask& a, const BitMask& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "similarity over different universes");
  return similarity(a.ones(), b.ones());
}

std::size_t auto_k(std::size_t pruned_count) {
  return std::max<std::size_t>(1, (pruned_count + 9) / 10);
}

namespace {

struct SideDraws {
  std::vector<Draw> retained;  // indices already mapped to the universe
  std::vector<Draw> pruned;
};

/// Draws both sides of one universe. Empty pruned side: nothing to exchange.
SideDraws draw_universe(const Vector& retained_values, const BitMask& retained_active, const Vector& pruned_values,
                        const BitMask& pruned_active, std::size_t k, Rng& rng) {
  SideDraws out;
  const auto pruned_idx = pruned_active.ones();
  if (pruned_idx.empty()) return out;
  const auto retained_idx = retained_active.ones();
  if (retained_idx.empty()) throw Error(ErrorCode::DegenerateMasks, "retained side is empty");

  auto run = [&](const std::vector<Index>& idx, const Vector& values, Direction dir) {
    std::vector<double> mags(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) mags[i] = values(idx[i]);
    auto draws = gumbel_sample(mags, k, dir, rng);
    for (auto& d : draws) d.index = idx[static_cast<std::size_t>(d.index)];
    return draws;
  };
  out.pruned = run(pruned_idx, pruned_values, Direction::Most);
  out.retained = run(retained_idx, retained_values, Direction::Least);
  return out;
}

std::vector<Index> indices(const std::vector<Draw>& draws) {
  std::vector<Index> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d.index);
  return out;
}

/// Keeps the `size` highest-score draws, returned sorted by index.
std::vector<Draw> truncate_by_score(std::vector<Draw> draws, std::size_t size) {
  if (draws.size() <= size) return draws;
  std::stable_sort(draws.begin(), draws.end(), [](const Draw& a, const Draw& b) { return a.score > b.score; });
  draws.resize(size);
  std::sort(draws.begin(), draws.end(), [](const Draw& a, const Draw& b) { return a.index < b.index; });
  return draws;
}

void equalize(SideDraws& d) {
  const std::size_t size = std::min(d.retained.size(), d.pruned.size());
  d.retained = truncate_by_score(std::move(d.retained), size);
  d.pruned = truncate_by_score(std::move(d.pruned), size);
}

struct TrainedSides {
  SoftMasks retained;
  SoftMasks pruned;
};

TrainedSides train_sides(const GraphDataset& ds, const ModelState& model, const BinaryMasks& current,
                         const TrainConfig& refine_cfg) {
  ModelState retained_model = model;
  retained_model.rewind();
  SoftMasks retained = SoftMasks::ones_on(current, retained_model);
  train(ds, retained_model, retained, refine_cfg, true, true);

  ModelState pruned_model = model;
  pruned_model.rewind();
  SoftMasks pruned = SoftMasks::ones_on(current.complement(), pruned_model);
  train(ds, pruned_model, pruned, refine_cfg, true, true);
  return {std::move(retained), std::move(pruned)};
}

}  // namespace

AceResult ace_refine(const GraphDataset& ds, const ModelState& model, const BinaryMasks& binary, const AceConfig& cfg,
                     const TrainConfig& train_cfg, Rng& rng) {
  if (cfg.rounds < 1) throw Error(ErrorCode::InvalidArgument, "ACE needs at least one round");
  if (cfg.k_init && *cfg.k_init < 1) throw Error(ErrorCode::InvalidArgument, "ACE needs K >= 1");
  if (!(cfg.similarity_threshold >= 0.0 && cfg.similarity_threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "similarity threshold must be in [0, 1]");
  if (binary.adj.size() > 0 && !binary.adj.any()) throw Error(ErrorCode::DegenerateMasks, "no retained edges");
  if (binary.weight_count() == 0) throw Error(ErrorCode::DegenerateMasks, "no retained weights");

  TrainConfig refine_cfg = train_cfg;
  refine_cfg.epochs = cfg.refine_epochs;

  const BinaryMasks initial_pruned = binary.complement();
  std::size_t k_edges = cfg.k_init.value_or(auto_k(initial_pruned.adj.count()));
  std::size_t k_weights = cfg.k_init.value_or(auto_k(initial_pruned.weight_count()));

  AceResult result;
  result.masks = binary;
  std::vector<Index> prev_pruned_w, prev_pruned_e;
  // Masks a round started from, with the magnitudes trained on them. A
  // tripped gate falls back to the previous round's state and redraws there.
  struct RoundState {
    BinaryMasks masks;
    Vector ret_w, pr_w, ret_e, pr_e;
  };
  std::optional<RoundState> previous;

  auto sample = [&](const RoundState& st, SideDraws& w, SideDraws& e) {
    const BinaryMasks complement = st.masks.complement();
    w = draw_universe(st.ret_w, st.masks.flat_weights(), st.pr_w, complement.flat_weights(), k_weights, rng);
    e = draw_universe(st.ret_e, st.masks.adj, st.pr_e, complement.adj, k_edges, rng);
  };

  for (int round = 0; round < cfg.rounds; ++round) {
    TrainedSides sides = train_sides(ds, model, result.masks, refine_cfg);
    RoundState state{result.masks, sides.retained.flat_weight_values(), sides.pruned.flat_weight_values(),
                     sides.retained.adj_values(), sides.pruned.adj_values()};

    AceTraceRow row;
    row.round = round;
    row.k_edges = k_edges;
    row.k_weights = k_weights;

    SideDraws dw, de;
    sample(state, dw, de);
    const RoundState* base = &state;
    if (round > 0) {
      row.sim_w = similarity(prev_pruned_w, indices(dw.retained));
      row.sim_e = similarity(prev_pruned_e, indices(de.retained));
      const bool trip_w = row.sim_w > cfg.similarity_threshold;
      const bool trip_e = row.sim_e > cfg.similarity_threshold;
      if (trip_w || trip_e) {
        if (cfg.adaptive_k) {
          if (trip_w) k_weights = std::max<std::size_t>(1, k_weights / 2);
          if (trip_e) k_edges = std::max<std::size_t>(1, k_edges / 2);
          row.halved = true;
        }
        if (cfg.resample && previous) {
          base = &*previous;
          sample(*base, dw, de);
          row.resampled = true;
        } else if (cfg.adaptive_k) {
          // no redraw: the halved budget keeps this round's best draws
          dw = {truncate_by_score(std::move(dw.retained), k_weights), truncate_by_score(std::move(dw.pruned), k_weights)};
          de = {truncate_by_score(std::move(de.retained), k_edges), truncate_by_score(std::move(de.pruned), k_edges)};
        }
      }
    }
    row.kprime_ret_w = dw.retained.size();
    row.kprime_pr_w = dw.pruned.size();
    row.kprime_ret_e = de.retained.size();
    row.kprime_pr_e = de.pruned.size();

    if (cfg.equalize_swap) {
      equalize(dw);
      equalize(de);
    }
    SwapSets sets{indices(dw.retained), indices(dw.pruned), indices(de.retained), indices(de.pruned)};
    row.swapped_w = sets.omega_pruned.size();
    row.swapped_e = sets.alpha_pruned.size();
    result.masks = swap(base->masks, sets);
    prev_pruned_w = std::move(sets.omega_pruned);
    prev_pruned_e = std::move(sets.alpha_pruned);
    if (base == &state) previous = std::move(state);
    result.trace.push_back(row);
  }
  return result;
}

std::string ace_trace_to_csv(const std::vector<AceTraceRow>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "round,K_edges,K_weights,Kprime_ret_w,Kprime_pr_w,Kprime_ret_e,Kprime_pr_e,sim_w,sim_e,halved\n";
  for (const auto& r : trace) {
    out << r.round << ',' << r.k_edges << ',' << r.k_weights << ',' << r.kprime_ret_w << ',' << r.kprime_pr_w << ','
        << r.kprime_ret_e << ',' << r.kprime_pr_e << ',' << r.sim_w << ',' << r.sim_e << ',' << (r.halved ? 1 : 0)
        << '\n';
  }
  return out.str();
}

}  // namespace glt
