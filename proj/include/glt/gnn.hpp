#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "glt/autodiff.hpp"
#include "glt/bitmask.hpp"
#include "glt/dataset.hpp"

namespace glt {

enum class Backbone { GCN, GIN };

std::string to_string(Backbone b);
Backbone backbone_from_string(const std::string& s);

/// Two-layer model d -> hidden -> classes, no biases. The initialization
/// snapshot is shared between copies and never modified.
class ModelState {
 public:
  /// Glorot-uniform draw from the seed; the draw becomes the init snapshot.
  static ModelState glorot(Index in_dim, Index hidden_dim, Index num_classes, Backbone backbone, std::uint64_t seed,
                           double gin_epsilon = 0.0);
  static ModelState for_dataset(const GraphDataset& ds, Index hidden_dim, Backbone backbone, std::uint64_t seed);
  /// Explicit weights; they also become the init snapshot.
  static ModelState from_weights(std::vector<Matrix> weights, Backbone backbone, double gin_epsilon = 0.0);

  std::vector<Tensor> layers;

  const std::vector<Matrix>& init_snapshot() const { return *init_; }
  Index hidden_dim() const { return layers.front().value.cols(); }
  Backbone backbone() const { return backbone_; }
  double gin_epsilon() const { return gin_epsilon_; }
  std::size_t num_weights() const;

  /// Restores every layer to the init snapshot and clears gradients.
  void rewind();
  std::vector<Matrix> weights() const;
  void set_weights(const std::vector<Matrix>& w);

 private:
  ModelState(std::vector<Matrix> weights, Backbone backbone, double gin_epsilon);

  std::shared_ptr<const std::vector<Matrix>> init_;
  Backbone backbone_ = Backbone::GCN;
  double gin_epsilon_ = 0.0;
};

/// Frozen 0/1 structure of a ticket: one bit per undirected edge and one per
/// weight entry (row-major within each layer).
struct BinaryMasks {
  BitMask adj;
  std::vector<BitMask> weights;

  static BinaryMasks full(const GraphDataset& ds, const ModelState& model);

  /// (A ⊕ M_A, ¬M_W): the pruned substructure.
  BinaryMasks complement() const;

  std::size_t weight_universe() const;
  std::size_t weight_count() const;
  /// All layers concatenated in layer order.
  BitMask flat_weights() const;
  void set_flat_weights(const BitMask& flat);

  friend bool operator==(const BinaryMasks&, const BinaryMasks&) = default;
};

/// Trainable [0,1] masks. Entries outside `trainable` are held at exactly 0.
struct SoftMasks {
  Tensor adj;
  std::vector<Tensor> weights;
  BinaryMasks trainable;

  /// 1.0 on every set bit, 0 elsewhere; weight masks take the layer shapes.
  static SoftMasks ones_on(const BinaryMasks& active, const ModelState& model);

  /// Flattened weight-mask values, layer order.
  Vector flat_weight_values() const;
  Vector adj_values() const { return Eigen::Map<const Vector>(adj.value.data(), adj.value.size()); }
  double l1_adj() const { return adj.value.cwiseAbs().sum(); }
  double l1_weights() const;
};

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::uint64_t seed = 1;
  bool norm_grad_through_degree = true;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Pre-softmax logits of the masked model.
Var forward(Tape& tape, const GraphDataset& ds, ModelState& model, SoftMasks& masks, bool grad_through_degree = true);

/// Logits only, no gradient bookkeeping kept.
Matrix predict(const GraphDataset& ds, ModelState& model, SoftMasks& masks);

/// CE over the train split + λ1‖M_A‖₁ + λ2‖M_W‖₁.
double loss_retained(const GraphDataset& ds, ModelState& model, SoftMasks& masks, double lambda1, double lambda2);
/// Same formula, evaluated on the complement (pruned-side) masks.
double loss_pruned(const GraphDataset& ds, ModelState& model, SoftMasks& masks_complement, double lambda1,
                   double lambda2);

/// Argmax accuracy over `nodes`; ties resolve to the lower class index.
double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<Index>& nodes);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_acc = -1.0;
  double best_test_acc = 0.0;

  friend bool operator==(const TrainTrace&, const TrainTrace&) = default;
};

struct TrainResult {
  TrainTrace trace;
  /// Parameter and mask state at the best-validation epoch.
  std::vector<Matrix> best_weights;
  Matrix best_adj_mask;
  std::vector<Matrix> best_weight_masks;
};

/// Full-graph training. Row k of the trace describes the state after k
/// updates. On return model/masks hold the final state.
TrainResult train(const GraphDataset& ds, ModelState& model, SoftMasks& masks, const TrainConfig& cfg,
                  bool train_weights, bool train_masks);

/// Accuracy of the model under fixed binary masks.
double evaluate(const GraphDataset& ds, ModelState& model, const BinaryMasks& binary, Split split);

std::string trace_to_csv(const TrainTrace& trace);

}  // namespace glt
