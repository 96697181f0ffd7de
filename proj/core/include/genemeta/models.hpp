#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genemeta/autodiff.hpp"
#include "genemeta/tensor.hpp"

namespace genemeta {

enum class Architecture { mlp, cnn, transformer };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct ModelConfig {
  Architecture architecture = Architecture::mlp;
  std::size_t input_dim = 0;

  // MLP
  std::vector<std::size_t> hidden{128, 64};

  // CNN: `conv_layers` x (conv -> leaky relu -> max pool), all with `channels` outputs.
  std::size_t channels = 32;
  std::size_t kernel = 3;
  std::size_t conv_stride = 1;
  std::size_t padding = 1;
  std::size_t pool = 2;
  std::size_t pool_stride = 2;
  std::size_t conv_layers = 2;

  // Transformer encoder: features are cut into `tokens` contiguous chunks
  // (the last one zero-padded), each projected to `embed_dim`.
  std::size_t embed_dim = 32;
  std::size_t tokens = 16;
  std::size_t attention_layers = 1;

  double slope = 0.01;

  void validate() const;
  // Length of one token chunk for the transformer.
  std::size_t token_width() const;
  // Sequence length after the conv/pool stack.
  std::size_t cnn_output_length() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Named parameter tensors for one architecture. Value type: copies are deep.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(Architecture arch) : architecture_(arch) {}

  Architecture architecture() const noexcept { return architecture_; }
  std::size_t size() const noexcept { return tensors_.size(); }

  void add(std::string name, Tensor value);
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor& operator[](std::size_t i) { return tensors_.at(i); }
  const Tensor& operator[](std::size_t i) const { return tensors_.at(i); }
  const Tensor& at(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  std::size_t parameter_count() const;
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  Architecture architecture_ = Architecture::mlp;
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// One gradient tensor per parameter, aligned with ModelParams indices.
using ParamGrads = std::vector<Tensor>;

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

// Parameters placed on a tape as differentiable leaves, index-aligned with ModelParams.
std::vector<ad::Var> bind_parameters(ad::Tape& tape, const ModelParams& params);

// Each forward maps batch [B, input_dim] to cancer probabilities [B].
ad::Var forward_mlp(const ModelConfig& config, const ModelParams& params,
                    const std::vector<ad::Var>& bound, ad::Var batch);
ad::Var forward_cnn(const ModelConfig& config, const ModelParams& params,
                    const std::vector<ad::Var>& bound, ad::Var batch);
ad::Var forward_transformer(const ModelConfig& config, const ModelParams& params,
                            const std::vector<ad::Var>& bound, ad::Var batch);
ad::Var forward(const ModelConfig& config, const ModelParams& params,
                const std::vector<ad::Var>& bound, ad::Var batch);

// Scores in (0,1) for every row of `batch`.
Tensor predict(const ModelConfig& config, const ModelParams& params, const Tensor& batch);

struct LossAndGrad {
  double loss = 0.0;
  ParamGrads grads;
};

// Mean BCE of the model on (x, y) and its gradient w.r.t. every parameter.
LossAndGrad loss_and_grad(const ModelConfig& config, const ModelParams& params, const Tensor& x,
                          const Tensor& y);
double loss_only(const ModelConfig& config, const ModelParams& params, const Tensor& x,
                 const Tensor& y);

}  // namespace genemeta
