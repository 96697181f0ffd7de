#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "genemeta/dataset.hpp"

namespace genemeta {

// A family of related binary tasks. Labels come from one shared concept on a
// latent Gaussian vector z: sign(w . z[signal] + 0.2 * z0 * z1). Each dataset
// observes z through its own rotation of the signal coordinates into the
// remaining ones, with angles and offsets proportional to `perturbation`.
struct SynthSpec {
  std::size_t sources = 3;
  std::size_t source_samples = 200;
  std::size_t target_samples = 60;
  std::size_t features = 50;
  std::size_t signal_dim = 10;
  double perturbation = 1.0;  // 0 gives identically distributed datasets
  double noise = 0.0;         // label flip rate, in [0, 0.5)
  double balance = 0.5;       // positive fraction before label noise, in (0, 1)
  std::uint64_t seed = 0;

  void validate() const;
};

struct TaskFamily {
  std::vector<ExpressionDataset> sources;  // named source_1 .. source_N
  ExpressionDataset target;                // named target
};

TaskFamily generate_task_family(const SynthSpec& spec);

// Writes <dir>/<name>.tsv for every dataset; returns the paths, sources first.
std::vector<std::filesystem::path> write_task_family(const std::filesystem::path& dir,
                                                     const TaskFamily& family);

}  // namespace genemeta
