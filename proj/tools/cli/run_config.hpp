#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "genemeta/cross_validation.hpp"
#include "genemeta/models.hpp"
#include "genemeta/synth.hpp"
#include "genemeta/trainer.hpp"

namespace genemeta::cli {

struct ExplainConfig {
  std::filesystem::path checkpoint;
  std::size_t samples = 10;
  std::size_t permutations = 1000;
  std::size_t top_k = 20;
  bool exact = false;
};

// Everything one run needs. Loaded from an INI file:
//
//   [run]         seed, out, jobs
//   [data]        target, sources (comma separated), interactions
//   [model]       architecture, hidden, channels, ... slope
//   [meta]        alpha, momentum, beta, lambda, epochs, batch_size, ...
//   [experiment]  trainer, folds, lambdas
//   [explain]     checkpoint, samples, permutations, top_k, exact
//   [synth]       sources, source_samples, ... balance
//
// Relative paths are resolved against the directory holding the file.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  unsigned jobs = 1;

  std::filesystem::path target;
  std::vector<std::filesystem::path> sources;
  std::optional<std::filesystem::path> interactions;

  ModelConfig model;
  MetaConfig meta;
  bool lambda_set = false;  // lambda given explicitly
  TrainerKind trainer = TrainerKind::meta;
  std::size_t folds = 10;
  std::vector<double> lambdas = kDefaultLambdaGrid;

  ExplainConfig explain;
  SynthSpec synth;

  ExperimentConfig experiment() const;
};

// Applies one `section.key=value` assignment. Throws ParseError for unknown
// keys or malformed values.
void set_value(RunConfig& config, const std::string& assignment,
               const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path);

// Full effective configuration, loadable by load_run_config.
void write_run_config(std::ostream& out, const RunConfig& config);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace genemeta::cli
