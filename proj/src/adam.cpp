#include "glt/adam.hpp"

#include <cmath>

#include "glt/error.hpp"

namespace glt {

void adam_step(std::span<const AdamParam> params, AdamState& state) {
  for (const AdamParam& p : params) {
    if (!p.tensor->backwarded) throw Error(ErrorCode::NotBackwarded, "adam_step before backward()");
  }
  if (state.first_moment.empty()) {
    for (const AdamParam& p : params) {
      state.first_moment.push_back(Matrix::Zero(p.tensor->value.rows(), p.tensor->value.cols()));
      state.second_moment.push_back(Matrix::Zero(p.tensor->value.rows(), p.tensor->value.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "AdamState was built for a different parameter list");
  }

  ++state.step;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t k = 0; k < params.size(); ++k) {
    const AdamParam& p = params[k];
    Matrix& value = p.tensor->value;
    Matrix g = p.tensor->grad;
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    if (m.rows() != value.rows() || m.cols() != value.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "Adam moment shape does not match parameter");
    }
    double* gd = g.data();
    const double* vd = value.data();
    if (p.kind == ParamKind::Mask && p.l1 != 0.0) {
      for (Index i = 0; i < g.size(); ++i) gd[i] += l1_subgradient(vd[i], p.l1);
    }
    if (p.trainable) {
      for (Index i = 0; i < g.size(); ++i)
        if (!p.trainable->test(static_cast<std::size_t>(i))) gd[i] = 0.0;
    }

    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
    if (p.kind == ParamKind::Weight && state.weight_decay != 0.0) value *= 1.0 - state.lr * state.weight_decay;
    value.array() -= state.lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + state.eps);

    if (p.kind == ParamKind::Mask) {
      value = value.cwiseMax(0.0).cwiseMin(1.0);
      if (p.trainable) {
        double* out = value.data();
        for (Index i = 0; i < value.size(); ++i)
          if (!p.trainable->test(static_cast<std::size_t>(i))) out[i] = 0.0;
      }
    }
    p.tensor->zero_grad();
  }
}

}  // namespace glt
