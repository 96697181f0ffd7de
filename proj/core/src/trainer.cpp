#include "genemeta/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "genemeta/error.hpp"

namespace genemeta {
namespace {

void require_finite(double loss, const char* what) {
  if (!std::isfinite(loss)) throw TrainingError(std::string("non-finite ") + what);
}

// Shuffled minibatches covering `rows` once; the last batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size,
                                                    Rng& rng) {
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < rows; start += batch_size) {
    const std::size_t end = std::min(rows, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

void add_scaled(ParamGrads& acc, const ParamGrads& g, double factor) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto a = acc[i].data();
    const auto b = g[i].data();
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += factor * b[j];
  }
}

ParamGrads zero_grads(const ModelParams& params) {
  ParamGrads out;
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(Tensor::zeros_like(params[i]));
  return out;
}

std::string step_context(std::size_t step, std::size_t epoch) {
  return " at step " + std::to_string(step) + " (epoch " + std::to_string(epoch) + ")";
}

// Adam over shuffled target minibatches; shared by plain training and the
// fine-tuning stage of transfer learning.
void run_supervised(const ModelConfig& model, const MetaConfig& config, const ExpressionDataset& data,
                    std::size_t epochs, Rng& batch_rng, ModelParams& params, TrainLog& log,
                    bool as_source, std::size_t epoch_offset, const StepObserver& observer) {
  AdamState adam = make_adam_state(params, config.adam_beta1, config.adam_beta2, config.adam_eps);
  for (std::size_t e = 0; e < epochs; ++e) {
    for (const auto& rows : epoch_batches(data.samples(), config.batch_size, batch_rng)) {
      const std::size_t step = log.records.size();
      const Batch batch = gather_batch(data, rows);
      LossAndGrad lg = loss_and_grad(model, params, batch.x, batch.y);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("non-finite loss" + step_context(step, epoch_offset + e));
      }
      outer_step(params, lg.grads, config.beta, adam);
      TrainRecord rec{step, epoch_offset + e, std::nullopt, std::nullopt, lg.loss};
      (as_source ? rec.loss_source : rec.loss_target) = lg.loss;
      log.records.push_back(rec);
      if (observer) observer(step, params);
    }
  }
}

std::string csv_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

void MetaConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ContractError("learning rates must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("lambda must lie in [0,1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("momentum must lie in [0,1)");
  if (epochs == 0) throw ContractError("epochs must be >= 1");
  if (batch_size == 0) throw ContractError("batch size must be >= 1");
}

ModelParams inner_adapt(const ModelConfig& model, const ModelParams& params, const Batch& batch,
                        double alpha, double momentum, SgdState& state) {
  const LossAndGrad lg = loss_and_grad(model, params, batch.x, batch.y);
  require_finite(lg.loss, "source loss during inner adaptation");
  ModelParams adapted = params;
  sgd_momentum_step(adapted, lg.grads, alpha, momentum, state);
  return adapted;
}

SourceLoss source_meta_loss(const ModelConfig& model, const ModelParams& base,
                            std::span<const ExpressionDataset> sources, std::size_t batch_size,
                            double alpha, double momentum, Rng& rng, bool fresh_eval_batch) {
  if (sources.empty()) throw ContractError("source loss needs at least one source dataset");
  SourceLoss out;
  out.grads = zero_grads(base);
  const double inv = 1.0 / static_cast<double>(sources.size());
  for (const auto& source : sources) {
    const Batch batch = sample_batch(source, batch_size, rng);
    SgdState velocity = make_sgd_state(base);
    const ModelParams adapted = inner_adapt(model, base, batch, alpha, momentum, velocity);
    const Batch eval = fresh_eval_batch ? sample_batch(source, batch_size, rng) : batch;
    // First-order: the adapted-point gradient stands in for the gradient
    // w.r.t. the base parameters.
    const LossAndGrad lg = loss_and_grad(model, adapted, eval.x, eval.y);
    require_finite(lg.loss, "adapted source loss");
    out.per_source.push_back(lg.loss);
    out.loss += lg.loss * inv;
    add_scaled(out.grads, lg.grads, inv);
  }
  return out;
}

double target_loss(const ModelConfig& model, const ModelParams& params, const Batch& batch) {
  return loss_only(model, params, batch.x, batch.y);
}

double meta_loss(double l_target, double l_source, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("lambda must lie in [0,1]");
  return lambda * l_target + (1.0 - lambda) * l_source;
}

MetaGradient meta_gradient(const ModelConfig& model, const ModelParams& params,
                           const Batch& target_batch, std::span<const ExpressionDataset> sources,
                           const MetaConfig& config, Rng& source_rng) {
  LossAndGrad target = loss_and_grad(model, params, target_batch.x, target_batch.y);
  require_finite(target.loss, "target loss");
  SourceLoss source = source_meta_loss(model, params, sources, config.batch_size, config.alpha,
                                       config.momentum, source_rng, config.fresh_eval_batch);
  MetaGradient out;
  out.loss_target = target.loss;
  out.loss_source = source.loss;
  out.loss_meta = meta_loss(target.loss, source.loss, config.lambda);
  out.grads = zero_grads(params);
  add_scaled(out.grads, target.grads, config.lambda);
  add_scaled(out.grads, source.grads, 1.0 - config.lambda);
  return out;
}

void outer_step(ModelParams& params, const ParamGrads& meta_grads, double beta, AdamState& state) {
  adam_step(params, meta_grads, beta, state);
}

TrainResult train_meta(const ModelConfig& model, const MetaConfig& config,
                       std::span<const ExpressionDataset> sources,
                       const ExpressionDataset& target_train, const StepObserver& observer) {
  config.validate();
  if (sources.empty()) throw ContractError("meta training needs at least one source dataset");
  if (target_train.samples() == 0) throw ContractError("empty target training set");

  TrainResult result{init_model(model, config.seed), {}};
  ModelParams& params = result.params;
  AdamState adam = make_adam_state(params, config.adam_beta1, config.adam_beta2, config.adam_eps);
  Rng target_rng(derive_seed(config.seed, kTargetBatchStream));
  Rng source_rng(derive_seed(config.seed, kSourceBatchStream));

  for (std::size_t e = 0; e < config.epochs; ++e) {
    for (const auto& rows : epoch_batches(target_train.samples(), config.batch_size, target_rng)) {
      const std::size_t step = result.log.records.size();
      MetaGradient mg;
      try {
        mg = meta_gradient(model, params, gather_batch(target_train, rows), sources, config, source_rng);
        outer_step(params, mg.grads, config.beta, adam);
      } catch (const TrainingError& err) {
        throw TrainingError(err.what() + step_context(step, e));
      }
      result.log.records.push_back({step, e, mg.loss_target, mg.loss_source, mg.loss_meta});
      if (observer) observer(step, params);
    }
  }
  return result;
}

TrainResult train_plain(const ModelConfig& model, const MetaConfig& config,
                        const ExpressionDataset& target_train, const StepObserver& observer) {
  config.validate();
  if (target_train.samples() == 0) throw ContractError("empty target training set");
  TrainResult result{init_model(model, config.seed), {}};
  Rng target_rng(derive_seed(config.seed, kTargetBatchStream));
  run_supervised(model, config, target_train, config.epochs, target_rng, result.params, result.log,
                 false, 0, observer);
  return result;
}

TrainResult train_transfer(const ModelConfig& model, const MetaConfig& config,
                           std::span<const ExpressionDataset> sources,
                           const ExpressionDataset& target_train, const StepObserver& observer) {
  config.validate();
  if (sources.empty()) throw ContractError("transfer learning needs at least one source dataset");
  if (target_train.samples() == 0) throw ContractError("empty target training set");
  TrainResult result{init_model(model, config.seed), {}};

  const ExpressionDataset pooled = concatenate(sources, "pooled_sources");
  Rng pooled_rng(derive_seed(config.seed, kPooledBatchStream));
  run_supervised(model, config, pooled, config.pretrain_epochs, pooled_rng, result.params,
                 result.log, true, 0, observer);

  result.log.stage_transition = result.log.records.size();
  Rng target_rng(derive_seed(config.seed, kTargetBatchStream));
  run_supervised(model, config, target_train, config.finetune_epochs, target_rng, result.params,
                 result.log, false, config.pretrain_epochs, observer);
  return result;
}

void write_train_log_csv(std::ostream& out, const TrainLog& log) {
  out << "step,epoch,loss_target,loss_source,loss_meta\n";
  for (const auto& r : log.records) {
    out << r.step << ',' << r.epoch << ',' << csv_cell(r.loss_target) << ','
        << csv_cell(r.loss_source) << ',' << csv_cell(r.loss_meta) << '\n';
  }
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_train_log_csv(out, log);
}

}  // namespace genemeta
