#include "genemeta/cross_validation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

#include "genemeta/error.hpp"

namespace genemeta {
namespace {

// Runs body(i) for i in [0, n) on up to `jobs` threads. Exceptions are
// rethrown in index order once all workers finish.
template <typename Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::plain: return "plain";
    case TrainerKind::meta: return "meta";
    case TrainerKind::transfer: return "transfer";
  }
  return "?";
}

TrainerKind parse_trainer(std::string_view name) {
  if (name == "plain") return TrainerKind::plain;
  if (name == "meta") return TrainerKind::meta;
  if (name == "transfer") return TrainerKind::transfer;
  throw ContractError("unknown trainer '" + std::string(name) + "' (expected plain, meta or transfer)");
}

FeatureSelection select_features(std::span<const ExpressionDataset> datasets,
                                 const GeneInteractionSet* interactions) {
  FeatureSelection sel;
  sel.common = select_common_genes(datasets);
  sel.selected = interactions ? filter_by_interactions(sel.common, *interactions) : sel.common;
  return sel;
}

ProjectedData prepare_datasets(std::span<const ExpressionDataset> datasets,
                               std::string_view target_name, const GeneInteractionSet* interactions) {
  ProjectedData out;
  out.selection = select_features(datasets, interactions);
  bool found = false;
  for (const auto& ds : datasets) {
    ExpressionDataset projected = project(ds, out.selection.selected);
    if (ds.name == target_name) {
      if (found) throw ContractError("target name '" + std::string(target_name) + "' is ambiguous");
      out.target = std::move(projected);
      found = true;
    } else {
      out.sources.push_back(apply_normalization(projected, fit_normalization(projected)));
    }
  }
  if (!found) throw ContractError("no dataset named '" + std::string(target_name) + "'");
  return out;
}

FoldData make_fold(const ExpressionDataset& target, const FoldSplit& split, std::size_t fold) {
  const auto train_rows = split.train_indices(fold);
  const ExpressionDataset train = subset(target, train_rows);
  const NormalizationStats stats = fit_normalization(train);
  return {apply_normalization(train, stats),
          apply_normalization(subset(target, split.test_indices(fold)), stats)};
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  return derive_seed(seed, kFoldStream, fold + 1);
}

TrainResult train_with(TrainerKind kind, const ModelConfig& model, const MetaConfig& meta,
                       std::span<const ExpressionDataset> sources,
                       const ExpressionDataset& target_train) {
  switch (kind) {
    case TrainerKind::plain: return train_plain(model, meta, target_train);
    case TrainerKind::meta: return train_meta(model, meta, sources, target_train);
    case TrainerKind::transfer: return train_transfer(model, meta, sources, target_train);
  }
  throw ContractError("unknown trainer kind");
}

CvResult cross_validate(const ProjectedData& data, const ExperimentConfig& config) {
  ModelConfig model = config.model;
  model.input_dim = data.selection.selected.size();
  model.validate();
  config.meta.validate();
  const FoldSplit split = stratified_kfold(data.target, config.folds, config.meta.seed);

  CvResult result;
  result.folds.resize(split.size());
  parallel_for(split.size(), config.jobs, [&](std::size_t f) {
    try {
      const FoldData fold = make_fold(data.target, split, f);
      MetaConfig meta = config.meta;
      meta.seed = fold_seed(config.meta.seed, f);
      const TrainResult trained = train_with(config.trainer, model, meta, data.sources, fold.train);
      const Tensor scores = predict(model, trained.params, fold.test.matrix);
      result.folds[f] = evaluate_scores(scores.data(), fold.test.labels);
    } catch (const NumericalError& e) {
      throw NumericalError("fold " + std::to_string(f) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }
  });
  result.mean = average_reports(result.folds);
  return result;
}

CvResult cross_validate(std::span<const ExpressionDataset> datasets, std::string_view target_name,
                        const ExperimentConfig& config, const GeneInteractionSet* interactions) {
  return cross_validate(prepare_datasets(datasets, target_name, interactions), config);
}

std::vector<SweepRow> lambda_sweep(const ProjectedData& data, const ExperimentConfig& config,
                                   std::span<const double> lambdas) {
  if (lambdas.empty()) throw ContractError("lambda sweep needs at least one lambda");
  for (double l : lambdas)
    if (!(l >= 0.0 && l <= 1.0)) throw ContractError("lambda " + fmt(l) + " outside [0,1]");
  std::vector<SweepRow> rows;
  for (double l : lambdas) {
    ExperimentConfig c = config;
    c.trainer = TrainerKind::meta;
    c.meta.lambda = l;
    SweepRow row{l, 0.0, 0.0, cross_validate(data, c)};
    row.f1_mean = row.cv.mean.f1;
    double var = 0.0;
    for (const auto& f : row.cv.folds) var += (f.f1 - row.f1_mean) * (f.f1 - row.f1_mean);
    row.f1_std = std::sqrt(var / static_cast<double>(row.cv.folds.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> lambda_sweep(std::span<const ExpressionDataset> datasets,
                                   std::string_view target_name, const ExperimentConfig& config,
                                   std::span<const double> lambdas,
                                   const GeneInteractionSet* interactions) {
  return lambda_sweep(prepare_datasets(datasets, target_name, interactions), config, lambdas);
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "lambda,f1_mean,f1_std\n";
  for (const auto& r : rows) out << fmt(r.lambda) << ',' << fmt(r.f1_mean) << ',' << fmt(r.f1_std) << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_sweep_csv(out, rows);
}

}  // namespace genemeta
