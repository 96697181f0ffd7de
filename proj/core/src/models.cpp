#include "genemeta/models.hpp"

#include <cmath>
#include <random>

#include "genemeta/error.hpp"
#include "genemeta/rng.hpp"

namespace genemeta {
namespace {

std::size_t conv_length(std::size_t len, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (len + 2 * pad < kernel) return 0;
  return (len + 2 * pad - kernel) / stride + 1;
}

std::size_t pool_length(std::size_t len, std::size_t window, std::size_t stride) {
  if (len < window) return 0;
  return (len - window) / stride + 1;
}

Tensor uniform_tensor(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void check_batch(const ModelConfig& config, ad::Var batch) {
  const Shape& s = batch.shape();
  if (s.size() != 2 || s[1] != config.input_dim) {
    throw DimensionError("model expects batch [B x " + std::to_string(config.input_dim) +
                         "], got " + shape_string(s));
  }
}

ad::Var param(const ModelParams& params, const std::vector<ad::Var>& bound, std::string_view name) {
  return bound.at(params.index_of(name));
}

// Output head shared by all architectures: sigmoid(h * W_output^T), one unit.
ad::Var output_head(const ModelParams& params, const std::vector<ad::Var>& bound, ad::Var h) {
  ad::Var logits = ad::linear(h, param(params, bound, "output.weight"));
  const std::size_t rows = logits.shape()[0];
  return ad::sigmoid(ad::reshape(logits, {rows}));
}

}  // namespace

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::mlp: return "mlp";
    case Architecture::cnn: return "cnn";
    case Architecture::transformer: return "transformer";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "mlp") return Architecture::mlp;
  if (name == "cnn") return Architecture::cnn;
  if (name == "transformer") return Architecture::transformer;
  throw ContractError("unknown architecture '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (input_dim == 0) throw ContractError("model input dimension must be positive");
  if (!(slope > 0.0 && slope < 1.0)) throw ContractError("leaky relu slope must lie in (0,1)");
  switch (architecture) {
    case Architecture::mlp:
      if (hidden.empty()) throw ContractError("mlp needs at least one hidden layer");
      for (auto h : hidden)
        if (h == 0) throw ContractError("mlp hidden widths must be positive");
      break;
    case Architecture::cnn:
      if (channels == 0 || kernel == 0 || conv_stride == 0 || pool == 0 || pool_stride == 0 ||
          conv_layers == 0) {
        throw ContractError("cnn hyperparameters must be positive");
      }
      if (cnn_output_length() == 0) {
        throw DimensionError("input of length " + std::to_string(input_dim) +
                             " is too short for the conv/pool stack");
      }
      break;
    case Architecture::transformer:
      if (embed_dim == 0 || tokens == 0 || attention_layers == 0) {
        throw ContractError("transformer hyperparameters must be positive");
      }
      if (tokens > input_dim) {
        throw ContractError("token count " + std::to_string(tokens) + " exceeds input dimension " +
                            std::to_string(input_dim));
      }
      break;
  }
}

std::size_t ModelConfig::token_width() const { return (input_dim + tokens - 1) / tokens; }

std::size_t ModelConfig::cnn_output_length() const {
  std::size_t len = input_dim;
  for (std::size_t l = 0; l < conv_layers && len > 0; ++l) {
    len = conv_length(len, kernel, conv_stride, padding);
    len = len ? pool_length(len, pool, pool_stride) : 0;
  }
  return len;
}

void ModelParams::add(std::string name, Tensor value) {
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
}

std::size_t ModelParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

const Tensor& ModelParams::at(std::string_view name) const { return tensors_[index_of(name)]; }

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors_)
    if (!t.all_finite()) return false;
  return true;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, kInitStream));
  ModelParams params(config.architecture);
  switch (config.architecture) {
    case Architecture::mlp: {
      std::size_t in = config.input_dim;
      for (std::size_t l = 0; l < config.hidden.size(); ++l) {
        const std::size_t out = config.hidden[l];
        params.add("hidden" + std::to_string(l) + ".weight", uniform_tensor({out, in}, in, rng));
        params.add("hidden" + std::to_string(l) + ".bias", Tensor({out}));
        in = out;
      }
      params.add("output.weight", uniform_tensor({1, in}, in, rng));
      break;
    }
    case Architecture::cnn: {
      std::size_t c_in = 1;
      for (std::size_t l = 0; l < config.conv_layers; ++l) {
        params.add("conv" + std::to_string(l) + ".weight",
                   uniform_tensor({config.channels, c_in, config.kernel}, c_in * config.kernel, rng));
        c_in = config.channels;
      }
      const std::size_t flat = config.channels * config.cnn_output_length();
      params.add("output.weight", uniform_tensor({1, flat}, flat, rng));
      break;
    }
    case Architecture::transformer: {
      const std::size_t d = config.embed_dim;
      const std::size_t w = config.token_width();
      params.add("embed.weight", uniform_tensor({d, w}, w, rng));
      params.add("embed.bias", Tensor({d}));
      for (std::size_t l = 0; l < config.attention_layers; ++l) {
        const std::string prefix = config.attention_layers == 1 ? "" : "layer" + std::to_string(l) + ".";
        params.add(prefix + "query.weight", uniform_tensor({d, d}, d, rng));
        params.add(prefix + "key.weight", uniform_tensor({d, d}, d, rng));
        params.add(prefix + "value.weight", uniform_tensor({d, d}, d, rng));
      }
      params.add("output.weight", uniform_tensor({1, d}, d, rng));
      break;
    }
  }
  return params;
}

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const ModelParams& params) {
  std::vector<ad::Var> bound;
  bound.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) bound.push_back(tape.variable(params[i]));
  return bound;
}

ad::Var forward_mlp(const ModelConfig& config, const ModelParams& params,
                    const std::vector<ad::Var>& bound, ad::Var batch) {
  check_batch(config, batch);
  ad::Var h = batch;
  for (std::size_t l = 0; l < config.hidden.size(); ++l) {
    const std::string p = "hidden" + std::to_string(l);
    h = ad::leaky_relu(
        ad::linear(h, param(params, bound, p + ".weight"), param(params, bound, p + ".bias")),
        config.slope);
  }
  return output_head(params, bound, h);
}

ad::Var forward_cnn(const ModelConfig& config, const ModelParams& params,
                    const std::vector<ad::Var>& bound, ad::Var batch) {
  check_batch(config, batch);
  const std::size_t rows = batch.shape()[0];
  ad::Var h = ad::reshape(batch, {rows, 1, config.input_dim});
  for (std::size_t l = 0; l < config.conv_layers; ++l) {
    h = ad::conv1d(h, param(params, bound, "conv" + std::to_string(l) + ".weight"),
                   config.conv_stride, config.padding);
    h = ad::leaky_relu(h, config.slope);
    h = ad::max_pool1d(h, config.pool, config.pool_stride);
  }
  const std::size_t flat = h.value().size() / rows;
  return output_head(params, bound, ad::reshape(h, {rows, flat}));
}

ad::Var forward_transformer(const ModelConfig& config, const ModelParams& params,
                            const std::vector<ad::Var>& bound, ad::Var batch) {
  check_batch(config, batch);
  const std::size_t rows = batch.shape()[0];
  const std::size_t t = config.tokens, w = config.token_width(), d = config.embed_dim;
  ad::Var x = ad::pad_last(batch, t * w);
  ad::Var tokens = ad::reshape(x, {rows, t, w});
  ad::Var h = ad::linear(tokens, param(params, bound, "embed.weight"),
                         param(params, bound, "embed.bias"));  // [B, t, d]
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t l = 0; l < config.attention_layers; ++l) {
    const std::string prefix = config.attention_layers == 1 ? "" : "layer" + std::to_string(l) + ".";
    ad::Var q = ad::linear(h, param(params, bound, prefix + "query.weight"));
    ad::Var k = ad::linear(h, param(params, bound, prefix + "key.weight"));
    ad::Var v = ad::linear(h, param(params, bound, prefix + "value.weight"));
    ad::Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_d);  // [B, t, t]
    h = ad::matmul(ad::softmax(scores, 2), v);                                 // [B, t, d]
  }
  return output_head(params, bound, ad::mean(h, 1));
}

ad::Var forward(const ModelConfig& config, const ModelParams& params,
                const std::vector<ad::Var>& bound, ad::Var batch) {
  if (params.architecture() != config.architecture) {
    throw ContractError("parameters are for '" + std::string(to_string(params.architecture())) +
                        "' but config selects '" + std::string(to_string(config.architecture)) + "'");
  }
  switch (config.architecture) {
    case Architecture::mlp: return forward_mlp(config, params, bound, batch);
    case Architecture::cnn: return forward_cnn(config, params, bound, batch);
    case Architecture::transformer: return forward_transformer(config, params, bound, batch);
  }
  throw ContractError("unknown architecture");
}

Tensor predict(const ModelConfig& config, const ModelParams& params, const Tensor& batch) {
  ad::Tape tape;
  std::vector<ad::Var> bound;
  bound.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) bound.push_back(tape.constant(params[i]));
  return forward(config, params, bound, tape.constant(batch)).value();
}

LossAndGrad loss_and_grad(const ModelConfig& config, const ModelParams& params, const Tensor& x,
                          const Tensor& y) {
  ad::Tape tape;
  const auto bound = bind_parameters(tape, params);
  ad::Var loss = ad::bce_loss(forward(config, params, bound, tape.constant(x)), tape.constant(y));
  const ad::Gradients grads = tape.backward(loss);
  LossAndGrad out{loss.value().item(), {}};
  out.grads.reserve(bound.size());
  for (const auto& v : bound) out.grads.push_back(grads[v]);
  return out;
}

double loss_only(const ModelConfig& config, const ModelParams& params, const Tensor& x,
                 const Tensor& y) {
  ad::Tape tape;
  std::vector<ad::Var> bound;
  for (std::size_t i = 0; i < params.size(); ++i) bound.push_back(tape.constant(params[i]));
  return ad::bce_loss(forward(config, params, bound, tape.constant(x)), tape.constant(y))
      .value()
      .item();
}

}  // namespace genemeta
