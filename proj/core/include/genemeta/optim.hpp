#pragma once

#include <cstddef>
#include <vector>

#include "genemeta/models.hpp"

namespace genemeta {

// Velocity buffers for SGD with momentum, shaped like the parameters.
struct SgdState {
  std::vector<Tensor> velocity;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

SgdState make_sgd_state(const ModelParams& params);
AdamState make_adam_state(const ModelParams& params, double beta1 = 0.9, double beta2 = 0.999,
                          double eps = 1e-8);

// v <- momentum * v + g;  theta <- theta - lr * v
void sgd_momentum_step(ModelParams& params, const ParamGrads& grads, double lr, double momentum,
                       SgdState& state);

// Bias-corrected Adam update with learning rate `lr`.
void adam_step(ModelParams& params, const ParamGrads& grads, double lr, AdamState& state);

}  // namespace genemeta
