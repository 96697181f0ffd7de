#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genemeta/dataset.hpp"
#include "genemeta/metrics.hpp"
#include "genemeta/models.hpp"
#include "genemeta/trainer.hpp"

namespace genemeta {

enum class TrainerKind { plain, meta, transfer };

std::string_view to_string(TrainerKind kind);
TrainerKind parse_trainer(std::string_view name);

struct ExperimentConfig {
  ModelConfig model;  // input_dim is filled in from the feature selection
  MetaConfig meta;
  TrainerKind trainer = TrainerKind::meta;
  std::size_t folds = 10;
  unsigned jobs = 1;  // worker threads across folds
};

struct FeatureSelection {
  std::vector<std::string> common;    // shared by every dataset, sorted
  std::vector<std::string> selected;  // common genes with >= 1 interaction
};

// Intersection across datasets, then interaction filtering when `interactions`
// is given (otherwise selected == common).
FeatureSelection select_features(std::span<const ExpressionDataset> datasets,
                                 const GeneInteractionSet* interactions);

// Target first, sources after, all projected onto the selected genes.
struct ProjectedData {
  FeatureSelection selection;
  ExpressionDataset target;
  std::vector<ExpressionDataset> sources;  // normalised with their own statistics
};

ProjectedData prepare_datasets(std::span<const ExpressionDataset> datasets,
                               std::string_view target_name,
                               const GeneInteractionSet* interactions);

struct FoldData {
  ExpressionDataset train;  // normalised with train statistics
  ExpressionDataset test;   // normalised with train statistics
};

FoldData make_fold(const ExpressionDataset& target, const FoldSplit& split, std::size_t fold);

// Training seed used for one fold, shared by every trainer kind and lambda.
std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

TrainResult train_with(TrainerKind kind, const ModelConfig& model, const MetaConfig& meta,
                       std::span<const ExpressionDataset> sources,
                       const ExpressionDataset& target_train);

struct CvResult {
  std::vector<MetricsReport> folds;
  MetricsReport mean;
};

CvResult cross_validate(std::span<const ExpressionDataset> datasets, std::string_view target_name,
                        const ExperimentConfig& config,
                        const GeneInteractionSet* interactions = nullptr);

// Same, starting from already projected data.
CvResult cross_validate(const ProjectedData& data, const ExperimentConfig& config);

struct SweepRow {
  double lambda = 0.0;
  double f1_mean = 0.0;
  double f1_std = 0.0;  // population standard deviation over folds
  CvResult cv;
};

inline const std::vector<double> kDefaultLambdaGrid{0.1, 0.3, 0.5, 0.7, 0.9, 1.0};

std::vector<SweepRow> lambda_sweep(std::span<const ExpressionDataset> datasets,
                                   std::string_view target_name, const ExperimentConfig& config,
                                   std::span<const double> lambdas,
                                   const GeneInteractionSet* interactions = nullptr);
std::vector<SweepRow> lambda_sweep(const ProjectedData& data, const ExperimentConfig& config,
                                   std::span<const double> lambdas);

// Columns: lambda, f1_mean, f1_std.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

}  // namespace genemeta
