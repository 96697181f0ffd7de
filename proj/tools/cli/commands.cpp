#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "genemeta/checkpoint.hpp"
#include "genemeta/cross_validation.hpp"
#include "genemeta/error.hpp"
#include "genemeta/metrics.hpp"
#include "genemeta/rng.hpp"
#include "genemeta/shapley.hpp"
#include "genemeta/synth.hpp"

namespace genemeta::cli {
namespace fs = std::filesystem;
namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string shortest(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Inputs {
  std::vector<ExpressionDataset> datasets;  // sources, then the target
  std::string target_name;
  std::optional<GeneInteractionSet> interactions;

  const GeneInteractionSet* interaction_ptr() const { return interactions ? &*interactions : nullptr; }
};

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ParseError(what + " is not set");
  if (!fs::is_regular_file(p)) throw ParseError(what + " not found: " + p.string());
}

Inputs load_inputs(const RunConfig& config) {
  require_file(config.target, "data.target");
  if (config.sources.empty()) throw ParseError("data.sources is empty");
  Inputs in;
  for (const auto& s : config.sources) {
    require_file(s, "source dataset");
    in.datasets.push_back(load_expression_tsv(s));
  }
  in.datasets.push_back(load_expression_tsv(config.target));
  in.target_name = in.datasets.back().name;
  if (config.interactions) {
    require_file(*config.interactions, "data.interactions");
    in.interactions = load_interactions_tsv(*config.interactions);
  }
  return in;
}

ProjectedData prepare(const Inputs& in) {
  return prepare_datasets(in.datasets, in.target_name, in.interaction_ptr());
}

ModelConfig sized_model(const RunConfig& config, const ProjectedData& data) {
  ModelConfig m = config.model;
  m.input_dim = data.selection.selected.size();
  m.validate();
  return m;
}

void start_run(const RunConfig& config) {
  fs::create_directories(config.out);
  std::ofstream snapshot(config.out / "config.ini", std::ios::binary);
  if (!snapshot) throw Error("cannot write " + (config.out / "config.ini").string());
  write_run_config(snapshot, config);
}

void warn_ignored_lambda(const RunConfig& config, std::ostream& err) {
  if (config.trainer == TrainerKind::plain && config.lambda_set) {
    err << "warning: lambda is ignored by trainer=plain\n";
  }
}

// The target split every command shares, warning when a class is too small
// to appear in every fold.
FoldSplit target_split(const RunConfig& config, const ProjectedData& data, std::ostream& err) {
  FoldSplit split = stratified_kfold(data.target, config.folds, config.seed);
  if (split.relaxed) {
    err << "warning: a class has fewer than " << config.folds
        << " target samples; some folds contain only one class\n";
  }
  return split;
}

std::string model_label(const RunConfig& config) {
  std::string label = std::string(to_string(config.model.architecture)) + "-" +
                      std::string(to_string(config.trainer));
  if (config.trainer == TrainerKind::meta) label += "-lambda" + shortest(config.meta.lambda);
  return label;
}

void print_metrics_table(std::ostream& out, const std::string& model, const MetricsReport& r) {
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %9s %9s %9s %9s %9s\n", "model", "accuracy", "f1",
                "precision", "recall", "prauc");
  out << line;
  std::snprintf(line, sizeof line, "%-28s %9s %9s %9s %9s %9s\n", model.c_str(),
                fixed(r.accuracy).c_str(), fixed(r.f1).c_str(), fixed(r.precision).c_str(),
                fixed(r.recall).c_str(), r.pr_auc ? fixed(*r.pr_auc).c_str() : "n/a");
  out << line;
}

}  // namespace

void cmd_preprocess(const RunConfig& config, std::ostream& out) {
  const Inputs in = load_inputs(config);
  const ProjectedData data = prepare(in);
  start_run(config);

  const fs::path dir = config.out / "preprocessed";
  fs::create_directories(dir);
  for (const auto& ds : data.sources) write_expression_tsv(dir / (ds.name + ".tsv"), ds);
  write_expression_tsv(dir / (data.target.name + ".tsv"),
                       apply_normalization(data.target, fit_normalization(data.target)));

  std::ofstream genes(config.out / "genes.txt", std::ios::binary);
  for (const auto& g : data.selection.selected) genes << g << '\n';

  std::ofstream report(config.out / "selection_report.csv", std::ios::binary);
  report << "stage,genes\n";
  out << "stage                          genes\n";
  auto row = [&](const std::string& stage, std::size_t n) {
    report << stage << ',' << n << '\n';
    char line[128];
    std::snprintf(line, sizeof line, "%-30s %6zu\n", stage.c_str(), n);
    out << line;
  };
  for (const auto& ds : in.datasets) row("dataset:" + ds.name, ds.genes());
  row("intersection", data.selection.common.size());
  row("interaction_filter", data.selection.selected.size());
  if (!report || !genes) throw Error("cannot write preprocessing outputs under " + config.out.string());
}

void cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
  warn_ignored_lambda(config, err);
  const ProjectedData data = prepare(load_inputs(config));
  const ModelConfig model = sized_model(config, data);
  config.meta.validate();
  start_run(config);

  // Fold 0 of the k-fold split is held out; explain reuses the same split.
  const FoldSplit split = target_split(config, data, err);
  const FoldData fold = make_fold(data.target, split, 0);
  MetaConfig meta = config.meta;
  meta.seed = fold_seed(config.seed, 0);
  const TrainResult result = train_with(config.trainer, model, meta, data.sources, fold.train);

  save_checkpoint(config.out / "checkpoint.txt", model, result.params);
  write_train_log_csv(config.out / "train_log.csv", result.log);

  const Tensor scores = predict(model, result.params, fold.test.matrix);
  const MetricsReport held_out = evaluate_scores(scores.data(), fold.test.labels);
  out << "trained " << model_label(config) << " for " << result.log.records.size() << " steps on "
      << fold.train.samples() << " target samples (" << model.input_dim << " genes)\n";
  if (!result.log.records.empty()) {
    out << "final meta loss " << fixed(result.log.records.back().loss_meta, 6) << '\n';
  }
  out << "held-out fold (" << fold.test.samples() << " samples):\n";
  print_metrics_table(out, model_label(config), held_out);
}

void cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  warn_ignored_lambda(config, err);
  const ProjectedData data = prepare(load_inputs(config));
  sized_model(config, data);
  target_split(config, data, err);
  start_run(config);
  const CvResult cv = cross_validate(data, config.experiment());
  write_metrics_csv(config.out / "cv_folds.csv", cv.folds, cv.mean);
  write_summary_csv(config.out / "metrics.csv", model_label(config), cv.mean);
  out << config.folds << "-fold cross-validation, mean over folds:\n";
  print_metrics_table(out, model_label(config), cv.mean);
}

void cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.lambdas.empty()) throw ContractError("lambda list is empty");
  for (double l : config.lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw ContractError("lambda " + shortest(l) + " outside [0,1]");
  }
  const ProjectedData data = prepare(load_inputs(config));
  sized_model(config, data);
  target_split(config, data, err);
  start_run(config);
  const auto rows = lambda_sweep(data, config.experiment(), config.lambdas);
  write_sweep_csv(config.out / "sweep.csv", rows);
  out << "lambda   f1_mean   f1_std\n";
  for (const auto& r : rows) {
    char line[96];
    std::snprintf(line, sizeof line, "%6s  %8s  %7s\n", shortest(r.lambda).c_str(),
                  fixed(r.f1_mean).c_str(), fixed(r.f1_std).c_str());
    out << line;
  }
}

void cmd_explain(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const ExplainConfig& ex = config.explain;
  if (!ex.exact && ex.permutations == 0) throw ContractError("explain.permutations must be >= 1");
  if (ex.samples == 0) throw ContractError("explain.samples must be >= 1");
  if (ex.top_k == 0) throw ContractError("explain.top_k must be >= 1");
  require_file(ex.checkpoint, "explain.checkpoint");
  const Checkpoint ckpt = load_checkpoint(ex.checkpoint);

  const ProjectedData data = prepare(load_inputs(config));
  const ModelConfig model = sized_model(config, data);
  if (ckpt.config.architecture != model.architecture) {
    throw ContractError("checkpoint architecture " + std::string(to_string(ckpt.config.architecture)) +
                        " does not match config architecture " +
                        std::string(to_string(model.architecture)));
  }
  if (ckpt.config.input_dim != model.input_dim) {
    throw ContractError("checkpoint expects " + std::to_string(ckpt.config.input_dim) +
                        " genes, config selects " + std::to_string(model.input_dim));
  }
  if (!(ckpt.config == model)) throw ContractError("checkpoint model settings do not match config");
  start_run(config);

  const FoldSplit split = target_split(config, data, err);
  const FoldData fold = make_fold(data.target, split, 0);
  const BatchFunction f = model_function(ckpt.config, ckpt.params);
  const std::size_t n = std::min(ex.samples, fold.test.samples());

  std::vector<Attribution> attributions;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> row = fold.test.matrix.row(i);
    attributions.push_back(
        ex.exact ? shapley_exact(f, fold.train.matrix, row, data.selection.selected)
                 : shapley_sampled(f, fold.train.matrix, row, ex.permutations,
                                   derive_seed(config.seed, kShapleyStream, i + 1),
                                   data.selection.selected));
  }
  const auto ranking = rank_features(attributions, ex.top_k);
  write_attributions_csv(config.out / "attributions.csv", attributions);
  write_ranking_csv(config.out / "ranking.csv", ranking);

  out << "explained " << n << " held-out samples; top " << ranking.size() << " genes:\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "%4zu  %-16s %s\n", i + 1, ranking[i].gene_id.c_str(),
                  fixed(ranking[i].mean_abs, 6).c_str());
    out << line;
  }
}

void cmd_synth(const RunConfig& config, std::ostream& out) {
  SynthSpec spec = config.synth;
  spec.seed = config.seed;
  spec.validate();
  const TaskFamily family = generate_task_family(spec);
  const auto paths = write_task_family(config.out, family);

  // The manifest is itself a run configuration for the generated family.
  RunConfig manifest;
  manifest.seed = config.seed;
  manifest.synth = spec;
  std::ofstream m(config.out / "manifest.ini", std::ios::binary);
  m << "[run]\nseed = " << config.seed << "\nout = run\n\n[data]\ntarget = "
    << paths.back().filename().generic_string() << "\nsources = ";
  for (std::size_t i = 0; i + 1 < paths.size(); ++i) {
    m << (i ? "," : "") << paths[i].filename().generic_string();
  }
  m << "\n\n[synth]\n"
    << "sources = " << spec.sources << "\nsource_samples = " << spec.source_samples
    << "\ntarget_samples = " << spec.target_samples << "\nfeatures = " << spec.features
    << "\nsignal_dim = " << spec.signal_dim << "\nperturbation = " << shortest(spec.perturbation)
    << "\nnoise = " << shortest(spec.noise) << "\nbalance = " << shortest(spec.balance) << '\n';
  if (!m) throw Error("cannot write " + (config.out / "manifest.ini").string());

  out << "wrote " << paths.size() << " datasets and manifest.ini to " << config.out.string() << '\n';
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Meta-learning for cancer classification from gene expression"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::vector<std::string> assignments;
  app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads across folds")->check(CLI::PositiveNumber);
  app.add_option("--set", assignments, "override a config key, section.key=value");

  // Per-command flags, collected as config assignments.
  std::vector<std::string> extra;
  auto flag = [&](CLI::App* cmd, const std::string& name, const std::string& key,
                  const std::string& help) {
    cmd->add_option_function<std::string>(
        name, [&extra, key](const std::string& v) { extra.push_back(key + "=" + v); }, help);
  };

  auto* preprocess = app.add_subcommand("preprocess", "select shared genes and normalise datasets");
  auto* train = app.add_subcommand("train", "train one model, write checkpoint and log");
  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation of the configured trainer");
  auto* sweep = app.add_subcommand("sweep", "cross-validated F1 over a lambda grid");
  auto* explain = app.add_subcommand("explain", "Shapley attributions for held-out samples");
  auto* synth = app.add_subcommand("synth", "generate a synthetic task family");

  for (auto* cmd : {train, evaluate, sweep}) {
    flag(cmd, "--arch", "model.architecture", "mlp, cnn or transformer");
    flag(cmd, "--epochs", "meta.epochs", "training epochs");
    flag(cmd, "--folds", "experiment.folds", "number of folds");
  }
  for (auto* cmd : {train, evaluate}) {
    flag(cmd, "--trainer", "experiment.trainer", "plain, meta or transfer");
    flag(cmd, "--lambda", "meta.lambda", "target weight in the meta loss");
  }
  flag(sweep, "--lambdas", "experiment.lambdas", "comma separated lambda grid");
  flag(explain, "--checkpoint", "explain.checkpoint", "checkpoint written by train");
  flag(explain, "--samples", "explain.samples", "held-out samples to explain");
  flag(explain, "--permutations", "explain.permutations", "sampled permutations per sample");
  flag(explain, "--top-k", "explain.top_k", "genes in the ranking");
  flag(explain, "--arch", "model.architecture", "mlp, cnn or transformer");
  explain->add_flag_function(
      "--exact", [&extra](std::int64_t) { extra.push_back("explain.exact=true"); },
      "exact enumeration (at most 12 genes)");
  flag(synth, "--sources", "synth.sources", "number of source datasets");
  flag(synth, "--source-samples", "synth.source_samples", "samples per source");
  flag(synth, "--target-samples", "synth.target_samples", "target samples");
  synth->add_option_function<std::string>(
      "--samples",
      [&extra](const std::string& v) {
        extra.push_back("synth.source_samples=" + v);
        extra.push_back("synth.target_samples=" + v);
      },
      "samples for every dataset");
  flag(synth, "--features", "synth.features", "genes per dataset");
  flag(synth, "--signal-dim", "synth.signal_dim", "dimension of the shared signal");
  flag(synth, "--perturbation", "synth.perturbation", "per-dataset shift strength");
  flag(synth, "--noise", "synth.noise", "label flip rate");
  flag(synth, "--balance", "synth.balance", "positive class fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    for (const auto& a : assignments) set_value(config, a);
    for (const auto& a : extra) set_value(config, a);
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = *jobs;
    if (!out_dir.empty()) config.out = out_dir;

    if (preprocess->parsed()) cmd_preprocess(config, out);
    else if (train->parsed()) cmd_train(config, out, err);
    else if (evaluate->parsed()) cmd_evaluate(config, out, err);
    else if (sweep->parsed()) cmd_sweep(config, out, err);
    else if (explain->parsed()) cmd_explain(config, out, err);
    else if (synth->parsed()) cmd_synth(config, out);
    return kExitOk;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace genemeta::cli
