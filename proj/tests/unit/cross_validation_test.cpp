#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "genemeta/cross_validation.hpp"
#include "genemeta/error.hpp"
#include "genemeta/synth.hpp"
#include "test_support.hpp"

namespace genemeta {
namespace {

std::vector<ExpressionDataset> small_family(std::uint64_t seed, std::size_t target_samples = 100) {
  SynthSpec spec;
  spec.seed = seed;
  spec.features = 12;
  spec.signal_dim = 4;
  spec.source_samples = 40;
  spec.target_samples = target_samples;
  spec.sources = 2;
  TaskFamily fam = generate_task_family(spec);
  std::vector<ExpressionDataset> all = fam.sources;
  all.push_back(fam.target);
  return all;
}

ExperimentConfig small_experiment(TrainerKind kind, std::uint64_t seed = 3) {
  ExperimentConfig c;
  c.model = testing::tiny_config(Architecture::mlp, 12);
  c.meta.seed = seed;
  c.meta.epochs = 2;
  c.meta.batch_size = 16;
  c.meta.pretrain_epochs = 1;
  c.meta.finetune_epochs = 2;
  c.trainer = kind;
  return c;
}

TEST(PrepareDatasets, TargetKeptRawSourcesNormalised) {
  const auto all = small_family(1);
  const ProjectedData data = prepare_datasets(all, "target", nullptr);
  EXPECT_EQ(data.sources.size(), 2u);
  EXPECT_EQ(data.target.matrix, all.back().matrix);
  for (const auto& s : data.sources) {
    const NormalizationStats st = fit_normalization(s);
    for (std::size_t c = 0; c < s.genes(); ++c) {
      EXPECT_LT(std::abs(st.mean[c]), 1e-9);
      EXPECT_NEAR(st.stddev[c], 1.0, 1e-9);
    }
  }
  EXPECT_THROW(prepare_datasets(all, "missing", nullptr), ContractError);
}

TEST(PrepareDatasets, InteractionFilter) {
  const auto all = small_family(1);
  GeneInteractionSet set;
  set.add("G03", "G99");
  set.add("G07", "G01");
  const ProjectedData data = prepare_datasets(all, "target", &set);
  EXPECT_EQ(data.selection.common.size(), 12u);
  EXPECT_EQ(data.selection.selected, (std::vector<std::string>{"G01", "G03", "G07"}));
  EXPECT_EQ(data.target.genes(), 3u);
}

TEST(MakeFold, TrainStatisticsOnly) {
  const auto all = small_family(2);
  const FoldSplit split = stratified_kfold(all.back(), 5, 1);
  const FoldData fold = make_fold(all.back(), split, 2);
  const NormalizationStats st = fit_normalization(fold.train);
  for (std::size_t c = 0; c < 12; ++c) EXPECT_LT(std::abs(st.mean[c]), 1e-9);
  EXPECT_EQ(fold.test.samples(), split.test_indices(2).size());
}

TEST(CrossValidate, Bookkeeping) {
  const auto all = small_family(3);
  const CvResult r = cross_validate(all, "target", small_experiment(TrainerKind::meta));
  ASSERT_EQ(r.folds.size(), 10u);
  double acc = 0.0;
  for (const auto& f : r.folds) {
    EXPECT_EQ(f.n_samples, 10u);
    acc += f.accuracy;
  }
  EXPECT_NEAR(r.mean.accuracy, acc / 10.0, 1e-12);
}

TEST(CrossValidate, PlainEqualsMetaAtLambdaOne) {
  const auto all = small_family(4, 60);
  ExperimentConfig meta = small_experiment(TrainerKind::meta);
  meta.meta.lambda = 1.0;
  const CvResult a = cross_validate(all, "target", meta);
  const CvResult b = cross_validate(all, "target", small_experiment(TrainerKind::plain));
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    EXPECT_NEAR(a.folds[f].f1, b.folds[f].f1, 1e-9);
    EXPECT_NEAR(a.folds[f].accuracy, b.folds[f].accuracy, 1e-9);
    EXPECT_NEAR(a.folds[f].pr_auc.value_or(-1), b.folds[f].pr_auc.value_or(-1), 1e-9);
  }
}

TEST(CrossValidate, DeterministicAndJobsIndependent) {
  const auto all = small_family(5, 60);
  ExperimentConfig c = small_experiment(TrainerKind::transfer);
  const CvResult a = cross_validate(all, "target", c);
  c.jobs = 3;
  const CvResult b = cross_validate(all, "target", c);
  std::ostringstream sa, sb;
  write_metrics_csv(sa, a.folds, a.mean);
  write_metrics_csv(sb, b.folds, b.mean);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(CrossValidate, TooManyFolds) {
  const auto all = small_family(6, 20);
  ExperimentConfig c = small_experiment(TrainerKind::plain);
  c.folds = 21;
  EXPECT_THROW(cross_validate(all, "target", c), SplitError);
}

TEST(CrossValidate, TrainingErrorsCarryFoldIndex) {
  auto all = small_family(7, 30);
  all.back().matrix.at(0, 0) = NAN;
  ExperimentConfig c = small_experiment(TrainerKind::plain);
  c.folds = 3;
  try {
    cross_validate(all, "target", c);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("fold "), std::string::npos) << e.what();
  }
}

TEST(LambdaSweep, RowsAndEndpoint) {
  const auto all = small_family(8, 60);
  const ExperimentConfig c = small_experiment(TrainerKind::meta);
  const std::vector<double> one{1.0};
  const auto rows = lambda_sweep(all, "target", c, one);
  ASSERT_EQ(rows.size(), 1u);
  const CvResult plain = cross_validate(all, "target", small_experiment(TrainerKind::plain));
  EXPECT_NEAR(rows[0].f1_mean, plain.mean.f1, 1e-9);

  const std::vector<double> grid{0.0, 0.5};
  EXPECT_EQ(lambda_sweep(all, "target", c, grid).size(), 2u);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(lambda_sweep(all, "target", c, bad), ContractError);
  EXPECT_THROW(lambda_sweep(all, "target", c, {}), ContractError);
}

TEST(LambdaSweep, StdIsPopulationOverFolds) {
  const auto all = small_family(9, 60);
  const std::vector<double> grid{0.3};
  const auto rows = lambda_sweep(all, "target", small_experiment(TrainerKind::meta), grid);
  double var = 0.0;
  for (const auto& f : rows[0].cv.folds) var += std::pow(f.f1 - rows[0].f1_mean, 2);
  EXPECT_NEAR(rows[0].f1_std, std::sqrt(var / rows[0].cv.folds.size()), 1e-15);
  std::ostringstream out;
  write_sweep_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "lambda,f1_mean,f1_std");
}

TEST(DefaultGrid, Values) {
  EXPECT_EQ(kDefaultLambdaGrid, (std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9, 1.0}));
}

}  // namespace
}  // namespace genemeta
