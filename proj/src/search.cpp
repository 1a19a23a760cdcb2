#include "glt/search.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "glt/error.hpp"

namespace glt {

std::string to_string(Method m) {
  switch (m) {
    case Method::ACE: return "ace";
    case Method::UGS: return "ugs";
    case Method::RANDOM: return "random";
  }
  return "ugs";
}

Method method_from_string(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "ace") return Method::ACE;
  if (s == "ugs") return Method::UGS;
  if (s == "random") return Method::RANDOM;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

std::string to_string(const FixedSide& f) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, f.value).ptr;
  const std::string value(buf, end);
  switch (f.kind) {
    case FixedSide::Kind::None: return "none";
    case FixedSide::Kind::Graph: return "graph@" + value;
    case FixedSide::Kind::Model: return "model@" + value;
  }
  return "none";
}

FixedSide fixed_side_from_string(const std::string& s) {
  if (s.empty() || s == "none") return {};
  const auto at = s.find('@');
  if (at == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--fix expects graph@F or model@F");
  const std::string side = s.substr(0, at);
  FixedSide f;
  if (side == "graph") f.kind = FixedSide::Kind::Graph;
  else if (side == "model") f.kind = FixedSide::Kind::Model;
  else throw Error(ErrorCode::InvalidArgument, "--fix side must be graph or model");
  try {
    std::size_t used = 0;
    f.value = std::stod(s.substr(at + 1), &used);
    if (used != s.size() - at - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "--fix value is not a number");
  }
  if (!(f.value >= 0.0 && f.value < 1.0)) throw Error(ErrorCode::InvalidArgument, "--fix value must be in [0, 1)");
  return f;
}

TicketEvaluation evaluate_ticket(const GraphDataset& ds, const ModelState& model_init, const BinaryMasks& masks,
                                 const TrainConfig& cfg) {
  ModelState model = model_init;
  model.rewind();
  SoftMasks fixed = SoftMasks::ones_on(masks, model);
  TrainConfig weights_only = cfg;
  weights_only.lambda1 = 0.0;
  weights_only.lambda2 = 0.0;
  auto result = train(ds, model, fixed, weights_only, /*train_weights=*/true, /*train_masks=*/false);
  TicketEvaluation eval;
  eval.test_accuracy = result.trace.best_test_acc;
  eval.val_accuracy = result.trace.best_val_acc;
  eval.trace = std::move(result.trace);
  return eval;
}

bool is_glt(double test_accuracy, double baseline_accuracy, double tolerance_points) {
  return test_accuracy >= baseline_accuracy - tolerance_points / 100.0;
}

int rounds_to_reach(double ratio, double value) {
  if (value == 0.0) return 0;
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "fixed side needs a ratio in (0, 1)");
  const double exact = std::log(1.0 - value) / std::log(1.0 - ratio);
  const int r = static_cast<int>(std::lround(exact));
  if (r < 1 || std::abs(1.0 - std::pow(1.0 - ratio, r) - value) > 1e-6)
    throw Error(ErrorCode::InvalidArgument, "fixed sparsity " + std::to_string(value) +
                                                " is not reachable with per-round ratio " + std::to_string(ratio));
  return r;
}

SearchResult search(const GraphDataset& ds, const ModelState& model_init, const SearchConfig& cfg,
                    std::uint64_t seed) {
  if (!(cfg.target_graph >= 0.0 && cfg.target_graph < 1.0 && cfg.target_model >= 0.0 && cfg.target_model < 1.0))
    throw Error(ErrorCode::InvalidArgument, "target sparsities must be in [0, 1)");

  SearchResult out;
  {
    TicketEvaluation dense;
    try {
      dense = evaluate_ticket(ds, model_init, BinaryMasks::full(ds, model_init), cfg.train);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteLoss) throw Error(ErrorCode::BaselineDivergence, e.what());
      throw;
    }
    out.dense_baseline_accuracy = dense.test_accuracy;
    out.baseline_trace = std::move(dense.trace);
  }

  const bool pin_graph = cfg.fixed.kind == FixedSide::Kind::Graph;
  const bool pin_model = cfg.fixed.kind == FixedSide::Kind::Model;
  const int pin_rounds =
      cfg.fixed.kind == FixedSide::Kind::None
          ? 0
          : rounds_to_reach(pin_graph ? cfg.ratios.graph : cfg.ratios.model, cfg.fixed.value);

  Rng select_rng = Rng::stream(seed, 0x5e1ec7);
  Rng ace_rng = Rng::stream(seed, 0xace);

  BinaryMasks active = BinaryMasks::full(ds, model_init);
  std::optional<BitMask> pinned_adj;
  std::optional<std::vector<BitMask>> pinned_weights;
  if (pin_rounds == 0 && pin_graph) pinned_adj = active.adj;
  if (pin_rounds == 0 && pin_model) pinned_weights = active.weights;

  for (int round = 0;; ++round) {
    if (pinned_adj) active.adj = *pinned_adj;
    if (pinned_weights) active.weights = *pinned_weights;
    const Sparsity now = sparsity(active);
    if (!(now.graph < cfg.target_graph && now.model < cfg.target_model)) break;

    PruneRatios ratios = cfg.ratios;
    if (pinned_adj) ratios.graph = 0.0;
    if (pinned_weights) ratios.model = 0.0;
    if (prune_count(ratios.graph, active.adj.count()) == 0 && prune_count(ratios.model, active.weight_count()) == 0)
      break;  // schedule can make no further progress

    ModelState model = model_init;
    model.rewind();
    PruneOptions options;
    options.per_layer_pooling = cfg.per_layer_pooling;
    options.selection = cfg.method == Method::RANDOM ? Selection::Random : Selection::Magnitude;
    options.rng = &select_rng;

    PruneResult pruned;
    try {
      pruned = magnitude_prune(ds, model, active, ratios, cfg.train, options);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyActiveSet) break;
      throw;
    }
    {
      const Sparsity stage = sparsity(active);
      out.stages.push_back({pruned.soft.adj_values(), pruned.soft.flat_weight_values(), stage.graph, stage.model});
    }

    BinaryMasks ticket = std::move(pruned.binary);
    if (cfg.method == Method::ACE) {
      AceResult refined = ace_refine(ds, model_init, ticket, cfg.ace, cfg.train, ace_rng);
      ticket = std::move(refined.masks);
      out.ace_traces.push_back(std::move(refined.trace));
    }

    if (round + 1 == pin_rounds) {
      if (pin_graph) pinned_adj = ticket.adj;
      if (pin_model) pinned_weights = ticket.weights;
    }

    TicketEvaluation eval = evaluate_ticket(ds, model_init, ticket, cfg.train);
    const Sparsity s = sparsity(ticket);
    TicketRecord rec;
    rec.graph_sparsity = s.graph;
    rec.model_sparsity = s.model;
    rec.test_accuracy = eval.test_accuracy;
    rec.val_accuracy = eval.val_accuracy;
    rec.dense_baseline_accuracy = out.dense_baseline_accuracy;
    rec.glt_tolerance = cfg.glt_tolerance;
    rec.is_glt = is_glt(eval.test_accuracy, out.dense_baseline_accuracy, cfg.glt_tolerance);
    rec.method = cfg.method;
    rec.seed = seed;
    rec.round_index = round;
    rec.masks = ticket;
    out.records.push_back(std::move(rec));
    out.ticket_traces.push_back(std::move(eval.trace));
    active = std::move(ticket);
  }
  return out;
}

GltSummary max_glt_sparsity(const std::vector<TicketRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptyRecords, "no ticket records");
  GltSummary best;
  double best_kept = 2.0;
  for (const auto& r : records) {
    if (!r.is_glt) continue;
    const double kept = (1.0 - r.graph_sparsity) * (1.0 - r.model_sparsity);
    if (kept < best_kept) {
      best_kept = kept;
      best = {true, r.graph_sparsity, r.model_sparsity, r.test_accuracy, r.round_index};
    }
  }
  return best;
}

}  // namespace glt
