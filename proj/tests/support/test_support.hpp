#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "genemeta/autodiff.hpp"
#include "genemeta/models.hpp"
#include "genemeta/rng.hpp"
#include "genemeta/tensor.hpp"

namespace genemeta::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;
// Elements whose analytic and numeric gradients are both this small are skipped.
inline constexpr double kFdMagnitudeFloor = 1e-6;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    path_ = base / ("genemeta_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

inline Tensor random_labels(std::size_t n, Rng& rng) {
  std::bernoulli_distribution b(0.5);
  Tensor t({n});
  for (double& v : t.data()) v = b(rng) ? 1.0 : 0.0;
  return t;
}

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

inline void accumulate(FdReport& r, double analytic, double numeric) {
  const double mag = std::max(std::abs(analytic), std::abs(numeric));
  if (mag <= kFdMagnitudeFloor) return;
  r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic - numeric) / mag);
  ++r.checked;
}

// Compares reverse-mode gradients of a scalar function of several tensors
// with central differences.
using TapeFunction = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline FdReport check_gradients(const TapeFunction& f, std::vector<Tensor> inputs) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  const ad::Gradients grads = tape.backward(f(tape, vars));

  auto eval = [&](const std::vector<Tensor>& in) {
    ad::Tape t;
    std::vector<ad::Var> v;
    for (const auto& x : in) v.push_back(t.variable(x));
    return f(t, v).value().item();
  };
  FdReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor analytic = grads[vars[i]];
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double saved = inputs[i][j];
      inputs[i][j] = saved + kFdStep;
      const double up = eval(inputs);
      inputs[i][j] = saved - kFdStep;
      const double down = eval(inputs);
      inputs[i][j] = saved;
      accumulate(report, analytic[j], (up - down) / (2.0 * kFdStep));
    }
  }
  return report;
}

// Same comparison for every parameter of a model under the mean BCE loss.
inline FdReport check_model_gradients(const ModelConfig& config, ModelParams params, const Tensor& x,
                                      const Tensor& y) {
  const LossAndGrad lg = loss_and_grad(config, params, x, y);
  FdReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t j = 0; j < params[p].size(); ++j) {
      const double saved = params[p][j];
      params[p][j] = saved + kFdStep;
      const double up = loss_only(config, params, x, y);
      params[p][j] = saved - kFdStep;
      const double down = loss_only(config, params, x, y);
      params[p][j] = saved;
      accumulate(report, lg.grads[p][j], (up - down) / (2.0 * kFdStep));
    }
  }
  return report;
}

// Distance of the forward pass from the nearest non-differentiable point.
// Central differences with step kFdStep measure a derivative only when every
// pre-activation stays on one side of its kink across the stencil.
inline constexpr double kKinkMargin = 100.0 * kFdStep;

inline double model_kink_margin(const ModelConfig& config, const ModelParams& params, const Tensor& x) {
  ad::Tape tape;
  const std::vector<ad::Var> bound = bind_parameters(tape, params);
  forward(config, params, bound, tape.constant(x));
  return tape.kink_margin();
}

inline ModelConfig tiny_config(Architecture arch, std::size_t d) {
  ModelConfig c;
  c.architecture = arch;
  c.input_dim = d;
  c.hidden = {8, 6};
  c.channels = 3;
  c.embed_dim = 6;
  c.tokens = std::min<std::size_t>(4, d);
  return c;
}

}  // namespace genemeta::testing
