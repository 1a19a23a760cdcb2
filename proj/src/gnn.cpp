#include "glt/gnn.hpp"

#include <cmath>
#include <sstream>

#include "glt/adam.hpp"
#include "glt/error.hpp"
#include "glt/rng.hpp"

namespace glt {

std::string to_string(Backbone b) { return b == Backbone::GCN ? "gcn" : "gin"; }

Backbone backbone_from_string(const std::string& s) {
  if (s == "gcn") return Backbone::GCN;
  if (s == "gin") return Backbone::GIN;
  throw Error(ErrorCode::InvalidArgument, "unknown backbone '" + s + "'");
}

// ---------------------------------------------------------------------------
// ModelState

ModelState::ModelState(std::vector<Matrix> weights, Backbone backbone, double gin_epsilon)
    : init_(std::make_shared<const std::vector<Matrix>>(weights)), backbone_(backbone), gin_epsilon_(gin_epsilon) {
  if (weights.size() != 2) throw Error(ErrorCode::ShapeMismatch, "model has exactly two layers");
  if (weights[0].cols() != weights[1].rows()) throw Error(ErrorCode::ShapeMismatch, "layer dims do not chain");
  for (auto& w : weights) layers.emplace_back(std::move(w));
}

ModelState ModelState::glorot(Index in_dim, Index hidden_dim, Index num_classes, Backbone backbone,
                              std::uint64_t seed, double gin_epsilon) {
  Rng rng = Rng::stream(seed, 0x1417);
  std::vector<Matrix> w;
  for (auto [rows, cols] : {std::pair{in_dim, hidden_dim}, std::pair{hidden_dim, num_classes}}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
    w.push_back(std::move(m));
  }
  return ModelState(std::move(w), backbone, gin_epsilon);
}

ModelState ModelState::for_dataset(const GraphDataset& ds, Index hidden_dim, Backbone backbone, std::uint64_t seed) {
  return glorot(ds.num_features(), hidden_dim, ds.num_classes(), backbone, seed);
}

ModelState ModelState::from_weights(std::vector<Matrix> weights, Backbone backbone, double gin_epsilon) {
  return ModelState(std::move(weights), backbone, gin_epsilon);
}

std::size_t ModelState::num_weights() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.value.size());
  return n;
}

void ModelState::rewind() {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].value = (*init_)[l];
    layers[l].zero_grad();
  }
}

std::vector<Matrix> ModelState::weights() const {
  std::vector<Matrix> w;
  for (const auto& l : layers) w.push_back(l.value);
  return w;
}

void ModelState::set_weights(const std::vector<Matrix>& w) {
  if (w.size() != layers.size()) throw Error(ErrorCode::ShapeMismatch, "weight list length");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (w[l].rows() != layers[l].value.rows() || w[l].cols() != layers[l].value.cols())
      throw Error(ErrorCode::ShapeMismatch, "weight shape");
    layers[l].value = w[l];
  }
}

// ---------------------------------------------------------------------------
// Masks

BinaryMasks BinaryMasks::full(const GraphDataset& ds, const ModelState& model) {
  BinaryMasks m;
  m.adj = BitMask(static_cast<std::size_t>(ds.num_edges()), true);
  for (const auto& l : model.layers) m.weights.emplace_back(static_cast<std::size_t>(l.value.size()), true);
  return m;
}

BinaryMasks BinaryMasks::complement() const {
  BinaryMasks c;
  // The edge universe is exactly the edges of A, so A ⊕ M_A is a bitwise not.
  c.adj = ~adj;
  for (const auto& w : weights) c.weights.push_back(~w);
  return c;
}

std::size_t BinaryMasks::weight_universe() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  return n;
}

std::size_t BinaryMasks::weight_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.count();
  return n;
}

BitMask BinaryMasks::flat_weights() const {
  BitMask flat(weight_universe());
  std::size_t offset = 0;
  for (const auto& w : weights) {
    for (std::size_t i = 0; i < w.size(); ++i) flat.set(offset + i, w.test(i));
    offset += w.size();
  }
  return flat;
}

void BinaryMasks::set_flat_weights(const BitMask& flat) {
  if (flat.size() != weight_universe()) throw Error(ErrorCode::ShapeMismatch, "flat weight mask size");
  std::size_t offset = 0;
  for (auto& w : weights) {
    for (std::size_t i = 0; i < w.size(); ++i) w.set(i, flat.test(offset + i));
    offset += w.size();
  }
}

namespace {

Tensor ones_tensor(const BitMask& bits, Index rows, Index cols) {
  Matrix v(rows, cols);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = bits.test(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
  return Tensor(std::move(v));
}

}  // namespace

SoftMasks SoftMasks::ones_on(const BinaryMasks& active, const ModelState& model) {
  if (active.weights.size() != model.layers.size()) throw Error(ErrorCode::ShapeMismatch, "weight mask count != layer count");
  SoftMasks s;
  s.adj = ones_tensor(active.adj, static_cast<Index>(active.adj.size()), 1);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Matrix& w = model.layers[l].value;
    if (active.weights[l].size() != static_cast<std::size_t>(w.size()))
      throw Error(ErrorCode::ShapeMismatch, "weight mask size for layer " + std::to_string(l));
    s.weights.push_back(ones_tensor(active.weights[l], w.rows(), w.cols()));
  }
  s.trainable = active;
  return s;
}

Vector SoftMasks::flat_weight_values() const {
  Index total = 0;
  for (const auto& w : weights) total += w.value.size();
  Vector out(total);
  Index offset = 0;
  for (const auto& w : weights) {
    out.segment(offset, w.value.size()) = Eigen::Map<const Vector>(w.value.data(), w.value.size());
    offset += w.value.size();
  }
  return out;
}

double SoftMasks::l1_weights() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.value.cwiseAbs().sum();
  return s;
}

namespace {

void check_shapes(const GraphDataset& ds, const ModelState& model, const SoftMasks& masks) {
  if (model.layers.size() != 2) throw Error(ErrorCode::ShapeMismatch, "two-layer model expected");
  if (model.layers[0].value.rows() != ds.num_features())
    throw Error(ErrorCode::ShapeMismatch, "layer 0 input dim != num_features");
  if (model.layers[1].value.cols() != ds.num_classes())
    throw Error(ErrorCode::ShapeMismatch, "layer 1 output dim != num_classes");
  if (masks.weights.size() != model.layers.size()) throw Error(ErrorCode::ShapeMismatch, "weight mask count");
  if (masks.adj.value.rows() != ds.num_edges() || masks.adj.value.cols() != 1)
    throw Error(ErrorCode::ShapeMismatch, "edge mask length != num_edges");
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (masks.weights[l].value.rows() != model.layers[l].value.rows() ||
        masks.weights[l].value.cols() != model.layers[l].value.cols())
      throw Error(ErrorCode::ShapeMismatch, "weight mask shape for layer " + std::to_string(l));
  }
}

Var transform_input(Tape& tape, const GraphDataset& ds, const Var& weight) {
  const SparseMatrix& xs = ds.sparse_features();
  const double density = ds.features().size() ? static_cast<double>(xs.nonZeros()) / static_cast<double>(ds.features().size()) : 0.0;
  if (density < 0.3) return ad::sparse_matmul(xs, weight);
  return ad::matmul(tape.constant_view(ds.features()), weight);
}

}  // namespace

Var forward(Tape& tape, const GraphDataset& ds, ModelState& model, SoftMasks& masks, bool grad_through_degree) {
  check_shapes(ds, model, masks);
  const Adjacency& adj = ds.adjacency();
  const Var edge_mask = tape.leaf(masks.adj);
  const Var w0 = ad::mul(tape.leaf(model.layers[0]), tape.leaf(masks.weights[0]));
  const Var w1 = ad::mul(tape.leaf(model.layers[1]), tape.leaf(masks.weights[1]));

  if (model.backbone() == Backbone::GCN) {
    const Var hidden = ad::relu(ad::gcn_propagate(adj, edge_mask, transform_input(tape, ds, w0), grad_through_degree));
    return ad::gcn_propagate(adj, edge_mask, ad::matmul(hidden, w1), grad_through_degree);
  }
  // GIN, transform-then-aggregate: ((1+ε)I + A⊙M) (h W) == ((1+ε)h + (A⊙M)h) W.
  const double self = 1.0 + model.gin_epsilon();
  const Var z0 = transform_input(tape, ds, w0);
  const Var hidden = ad::relu(ad::add(ad::scale(z0, self), ad::masked_spmm(adj, edge_mask, z0)));
  const Var z1 = ad::matmul(hidden, w1);
  return ad::add(ad::scale(z1, self), ad::masked_spmm(adj, edge_mask, z1));
}

Matrix predict(const GraphDataset& ds, ModelState& model, SoftMasks& masks) {
  Tape tape;
  return forward(tape, ds, model, masks).value();
}

namespace {

double regularized_loss(const GraphDataset& ds, ModelState& model, SoftMasks& masks, double lambda1, double lambda2) {
  Tape tape;
  const Var logits = forward(tape, ds, model, masks);
  const Var ce = ad::softmax_cross_entropy(logits, ds.labels(), ds.splits().train);
  return ce.value()(0, 0) + lambda1 * masks.l1_adj() + lambda2 * masks.l1_weights();
}

}  // namespace

double loss_retained(const GraphDataset& ds, ModelState& model, SoftMasks& masks, double lambda1, double lambda2) {
  return regularized_loss(ds, model, masks, lambda1, lambda2);
}

double loss_pruned(const GraphDataset& ds, ModelState& model, SoftMasks& masks_complement, double lambda1,
                   double lambda2) {
  return regularized_loss(ds, model, masks_complement, lambda1, lambda2);
}

double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<Index>& nodes) {
  if (nodes.empty()) return 0.0;
  std::size_t correct = 0;
  for (Index i : nodes) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

TrainResult train(const GraphDataset& ds, ModelState& model, SoftMasks& masks, const TrainConfig& cfg,
                  bool train_weights, bool train_masks) {
  if (!train_weights && !train_masks) throw Error(ErrorCode::InvalidArgument, "train: nothing to train");
  if (cfg.epochs < 1) throw Error(ErrorCode::InvalidArgument, "train: epochs must be >= 1");
  if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0) throw Error(ErrorCode::InvalidArgument, "train: negative lambda");
  check_shapes(ds, model, masks);

  std::vector<AdamParam> params;
  for (auto& layer : model.layers) {
    layer.requires_grad = train_weights;
    layer.zero_grad();
    if (train_weights) params.push_back({&layer, ParamKind::Weight});
  }
  masks.adj.requires_grad = train_masks;
  masks.adj.zero_grad();
  if (train_masks) params.push_back({&masks.adj, ParamKind::Mask, cfg.lambda1, &masks.trainable.adj});
  for (std::size_t l = 0; l < masks.weights.size(); ++l) {
    masks.weights[l].requires_grad = train_masks;
    masks.weights[l].zero_grad();
    if (train_masks) params.push_back({&masks.weights[l], ParamKind::Mask, cfg.lambda2, &masks.trainable.weights[l]});
  }

  AdamState adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;

  TrainResult result;
  auto snapshot = [&] {
    result.best_weights = model.weights();
    result.best_adj_mask = masks.adj.value;
    result.best_weight_masks.clear();
    for (const auto& w : masks.weights) result.best_weight_masks.push_back(w.value);
  };

  const auto& train_nodes = ds.splits().train;
  for (int step = 0; step <= cfg.epochs; ++step) {
    Tape tape;
    Var logits, ce;
    try {
      logits = forward(tape, ds, model, masks, cfg.norm_grad_through_degree);
      ce = ad::softmax_cross_entropy(logits, ds.labels(), train_nodes);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw Error(ErrorCode::NonFiniteLoss, "diverged at epoch " + std::to_string(step) + ": " + e.what());
    }
    const double loss = ce.value()(0, 0) + cfg.lambda1 * masks.l1_adj() + cfg.lambda2 * masks.l1_weights();
    if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "diverged at epoch " + std::to_string(step));

    if (step > 0) {
      EpochRecord rec{step, loss, accuracy(logits.value(), ds.labels(), ds.splits().val),
                      accuracy(logits.value(), ds.labels(), ds.splits().test)};
      result.trace.epochs.push_back(rec);
      if (rec.val_acc > result.trace.best_val_acc) {
        result.trace.best_val_acc = rec.val_acc;
        result.trace.best_test_acc = rec.test_acc;
        result.trace.best_epoch = step;
        snapshot();
      }
    }
    if (step == cfg.epochs) break;

    try {
      tape.backward(ce);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient at epoch " + std::to_string(step));
    }
    adam_step(params, adam);
  }

  for (auto& layer : model.layers) layer.requires_grad = true;
  masks.adj.requires_grad = true;
  for (auto& w : masks.weights) w.requires_grad = true;
  return result;
}

double evaluate(const GraphDataset& ds, ModelState& model, const BinaryMasks& binary, Split split) {
  SoftMasks masks = SoftMasks::ones_on(binary, model);
  return accuracy(predict(ds, model, masks), ds.labels(), ds.split(split));
}

std::string trace_to_csv(const TrainTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_acc,test_acc\n";
  for (const auto& r : trace.epochs) out << r.epoch << ',' << r.train_loss << ',' << r.val_acc << ',' << r.test_acc << '\n';
  return out.str();
}

}  // namespace glt
