#include "genemeta/optim.hpp"

#include <cmath>

#include "genemeta/error.hpp"

namespace genemeta {
namespace {

void check_aligned(const ModelParams& params, const ParamGrads& grads, std::size_t state_size) {
  if (grads.size() != params.size() || state_size != params.size()) {
    throw ContractError("optimizer: gradient/state count does not match parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].shape()) {
      throw DimensionError("optimizer: gradient " + shape_string(grads[i].shape()) +
                           " for parameter '" + params.name(i) + "' " +
                           shape_string(params[i].shape()));
    }
    if (!grads[i].all_finite()) {
      throw TrainingError("non-finite gradient for parameter '" + params.name(i) + "'");
    }
  }
}

std::vector<Tensor> zeros_like(const ModelParams& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(Tensor::zeros_like(params[i]));
  return out;
}

}  // namespace

SgdState make_sgd_state(const ModelParams& params) { return {zeros_like(params)}; }

AdamState make_adam_state(const ModelParams& params, double beta1, double beta2, double eps) {
  return {zeros_like(params), zeros_like(params), 0, beta1, beta2, eps};
}

void sgd_momentum_step(ModelParams& params, const ParamGrads& grads, double lr, double momentum,
                       SgdState& state) {
  check_aligned(params, grads, state.velocity.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto v = state.velocity[i].data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = momentum * v[j] + g[j];
      p[j] -= lr * v[j];
    }
  }
}

void adam_step(ModelParams& params, const ParamGrads& grads, double lr, AdamState& s) {
  check_aligned(params, grads, s.m.size());
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto m = s.m[i].data();
    auto v = s.v[i].data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = s.beta1 * m[j] + (1.0 - s.beta1) * g[j];
      v[j] = s.beta2 * v[j] + (1.0 - s.beta2) * g[j] * g[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + s.eps);
    }
  }
}

}  // namespace genemeta
