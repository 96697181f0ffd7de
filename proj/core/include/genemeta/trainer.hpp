#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "genemeta/dataset.hpp"
#include "genemeta/models.hpp"
#include "genemeta/optim.hpp"

namespace genemeta {

struct MetaConfig {
  double alpha = 0.0004;     // inner SGD learning rate
  double momentum = 0.2;     // inner SGD momentum
  double beta = 0.0004;      // outer Adam learning rate
  double lambda = 0.5;       // weight of the target loss in the meta loss
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  // Evaluate the adapted source loss on a second, freshly drawn batch instead
  // of the batch used for adaptation.
  bool fresh_eval_batch = false;

  std::size_t pretrain_epochs = 40;  // transfer learning, pooled sources
  std::size_t finetune_epochs = 40;  // transfer learning, target

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct TrainRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::optional<double> loss_target;
  std::optional<double> loss_source;
  double loss_meta = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  // Transfer learning only: index of the first fine-tuning record.
  std::optional<std::size_t> stage_transition;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

// Called after every outer update with the step index and new parameters.
using StepObserver = std::function<void(std::size_t step, const ModelParams& params)>;

// One SGD-with-momentum step on the batch loss, applied to a copy of `params`.
ModelParams inner_adapt(const ModelConfig& model, const ModelParams& params, const Batch& batch,
                        double alpha, double momentum, SgdState& state);

struct SourceLoss {
  double loss = 0.0;                // mean over sources of the adapted loss
  std::vector<double> per_source;   // adapted loss for each source
  ParamGrads grads;                 // first-order gradient, mean over sources
};

// For each source: draw a batch, adapt a copy of `base` with fresh momentum,
// then score the adapted copy. Gradients are taken at the adapted parameters.
SourceLoss source_meta_loss(const ModelConfig& model, const ModelParams& base,
                            std::span<const ExpressionDataset> sources, std::size_t batch_size,
                            double alpha, double momentum, Rng& rng,
                            bool fresh_eval_batch = false);

double target_loss(const ModelConfig& model, const ModelParams& params, const Batch& batch);

// lambda * target + (1 - lambda) * source
double meta_loss(double l_target, double l_source, double lambda);

struct MetaGradient {
  double loss_target = 0.0;
  double loss_source = 0.0;
  double loss_meta = 0.0;
  ParamGrads grads;
};

MetaGradient meta_gradient(const ModelConfig& model, const ModelParams& params,
                           const Batch& target_batch, std::span<const ExpressionDataset> sources,
                           const MetaConfig& config, Rng& source_rng);

// Adam update of `params` along the meta-loss gradient with learning rate beta.
void outer_step(ModelParams& params, const ParamGrads& meta_grads, double beta, AdamState& state);

TrainResult train_meta(const ModelConfig& model, const MetaConfig& config,
                       std::span<const ExpressionDataset> sources,
                       const ExpressionDataset& target_train, const StepObserver& observer = {});

TrainResult train_plain(const ModelConfig& model, const MetaConfig& config,
                        const ExpressionDataset& target_train, const StepObserver& observer = {});

// Adam on pooled sources for `pretrain_epochs`, then on the target for
// `finetune_epochs` with a fresh Adam state.
TrainResult train_transfer(const ModelConfig& model, const MetaConfig& config,
                           std::span<const ExpressionDataset> sources,
                           const ExpressionDataset& target_train,
                           const StepObserver& observer = {});

// Columns: step, epoch, loss_target, loss_source, loss_meta. Absent losses are empty cells.
void write_train_log_csv(std::ostream& out, const TrainLog& log);
void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

}  // namespace genemeta
