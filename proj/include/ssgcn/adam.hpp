#pragma once

#include "ssgcn/gcn.hpp"

#include <cmath>

namespace ssgcn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class Scalar = double>
struct AdamMoments {
  Matrix<Scalar> first;
  Matrix<Scalar> second;
};

template <class Scalar = double>
struct AdamState {
  AdamConfig config;
  long step = 0;
  AdamMoments<Scalar> w0;
  AdamMoments<Scalar> head;
  AdamMoments<Scalar> head_ss;
};

// One bias-corrected Adam update of a single tensor. weight_decay enters as an
// L2 term on the gradient. `step` is the 1-based step count.
template <class Scalar>
void adam_update(Matrix<Scalar>& param, const Matrix<Scalar>& grad, AdamMoments<Scalar>& mom, long step,
                 double learning_rate, double weight_decay, const AdamConfig& c) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) throw Error("adam: shape mismatch");
  if (mom.first.size() == 0) {
    mom.first = Matrix<Scalar>::Zero(param.rows(), param.cols());
    mom.second = Matrix<Scalar>::Zero(param.rows(), param.cols());
  }
  Matrix<Scalar> g = grad;
  if (weight_decay != 0.0) g += Scalar(weight_decay) * param;
  mom.first = Scalar(c.beta1) * mom.first + Scalar(1 - c.beta1) * g;
  mom.second = Scalar(c.beta2) * mom.second + Scalar(1 - c.beta2) * g.cwiseProduct(g);
  const Scalar bc1 = Scalar(1 - std::pow(c.beta1, static_cast<double>(step)));
  const Scalar bc2 = Scalar(1 - std::pow(c.beta2, static_cast<double>(step)));
  param.array() -= Scalar(learning_rate) * (mom.first.array() / bc1) /
                   ((mom.second.array() / bc2).sqrt() + Scalar(c.epsilon));
}

// Weight decay applies to W0 only. Heads absent from `grads` (empty matrix or
// missing head_ss) are left untouched.
template <class Scalar>
void adam_step(GcnParams<Scalar>& params, const GcnParams<Scalar>& grads, AdamState<Scalar>& state,
               double learning_rate, double weight_decay) {
  ++state.step;
  adam_update(params.w0, grads.w0, state.w0, state.step, learning_rate, weight_decay, state.config);
  if (grads.head.size() != 0)
    adam_update(params.head, grads.head, state.head, state.step, learning_rate, 0.0, state.config);
  if (grads.head_ss && params.head_ss)
    adam_update(*params.head_ss, *grads.head_ss, state.head_ss, state.step, learning_rate, 0.0, state.config);
}

}  // namespace ssgcn
