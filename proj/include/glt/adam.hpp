#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glt/autodiff.hpp"
#include "glt/bitmask.hpp"

namespace glt {

enum class ParamKind {
  /// Model weight: decoupled weight decay, unconstrained.
  Weight,
  /// Soft mask: ℓ1 subgradient, no decay, clamped to [0, 1].
  Mask,
};

struct AdamParam {
  Tensor* tensor = nullptr;
  ParamKind kind = ParamKind::Weight;
  /// ℓ1 coefficient (masks only).
  double l1 = 0.0;
  /// Entries outside this set get no update and are held at 0 (masks only).
  const BitMask* trainable = nullptr;
};

struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// λ·sign(value) with sign(0) = 0.
inline double l1_subgradient(double value, double lambda) {
  return value > 0.0 ? lambda : (value < 0.0 ? -lambda : 0.0);
}

/// One Adam update over params (moments are matched to params by position).
/// Consumes the gradients: every tensor's grad is zeroed afterwards.
void adam_step(std::span<const AdamParam> params, AdamState& state);

}  // namespace glt
