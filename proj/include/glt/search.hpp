#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glt/ace.hpp"
#include "glt/analytics.hpp"
#include "glt/imp.hpp"

namespace glt {

enum class Method { ACE, UGS, RANDOM };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// Pins one side's sparsity: that side is pruned on the normal schedule until
/// it reaches `value`, then its mask is restored to that stage before every
/// later round while the other side keeps compounding.
struct FixedSide {
  enum class Kind { None, Graph, Model };
  Kind kind = Kind::None;
  double value = 0.0;

  friend bool operator==(const FixedSide&, const FixedSide&) = default;
};

std::string to_string(const FixedSide& f);
/// "none", "graph@F" or "model@F".
FixedSide fixed_side_from_string(const std::string& s);

struct SearchConfig {
  double target_graph = 0.95;  // s_A
  double target_model = 0.95;  // s_W
  PruneRatios ratios;
  Method method = Method::ACE;
  FixedSide fixed;
  /// GLT tolerance δ in accuracy points.
  double glt_tolerance = 0.0;
  bool per_layer_pooling = false;
  TrainConfig train;
  AceConfig ace;

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

struct TicketRecord {
  BinaryMasks masks;
  double graph_sparsity = 0.0;
  double model_sparsity = 0.0;
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
  double dense_baseline_accuracy = 0.0;
  double glt_tolerance = 0.0;
  bool is_glt = false;
  Method method = Method::UGS;
  std::uint64_t seed = 0;
  int round_index = 0;

  friend bool operator==(const TicketRecord&, const TicketRecord&) = default;
};

struct TicketEvaluation {
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
  TrainTrace trace;
};

/// Trains W_init ⊙ M_W on A ⊙ M_A in isolation (weights only) and reports the
/// best-validation epoch.
TicketEvaluation evaluate_ticket(const GraphDataset& ds, const ModelState& model_init, const BinaryMasks& masks,
                                 const TrainConfig& cfg);

/// test ≥ baseline − δ/100.
bool is_glt(double test_accuracy, double baseline_accuracy, double tolerance_points);

/// Rounds r with 1 - (1 - ratio)^r == value; throws InvalidArgument when the
/// schedule cannot hit it.
int rounds_to_reach(double ratio, double value);

struct SearchResult {
  double dense_baseline_accuracy = 0.0;
  TrainTrace baseline_trace;
  std::vector<TicketRecord> records;
  /// Trained soft masks of each round's pruning phase.
  std::vector<MaskSnapshot> stages;
  std::vector<std::vector<AceTraceRow>> ace_traces;
  std::vector<TrainTrace> ticket_traces;
};

/// Iterative search: prune (magnitude or random) → ACE refine (ACE only) →
/// isolated retrain from W_init → record, until either target sparsity is met.
SearchResult search(const GraphDataset& ds, const ModelState& model_init, const SearchConfig& cfg,
                    std::uint64_t seed);

struct GltSummary {
  bool found = false;
  double graph_sparsity = 0.0;
  double model_sparsity = 0.0;
  double accuracy = 0.0;
  int round_index = -1;
};

/// The GLT record with the smallest retained fraction (1-s_A)(1-s_W); ties go
/// to the earlier round. found=false when no record is a GLT.
GltSummary max_glt_sparsity(const std::vector<TicketRecord>& records);

}  // namespace glt
