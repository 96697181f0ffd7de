#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "genemeta/models.hpp"
#include "genemeta/tensor.hpp"

namespace genemeta {

// Maps a batch [rows, features] to one output per row.
using BatchFunction = std::function<std::vector<double>(const Tensor& batch)>;

// The model's cancer probability as a BatchFunction.
BatchFunction model_function(const ModelConfig& config, const ModelParams& params);

// Shapley values of one sample under the game v(S) = f(x_S, m_rest), where
// m is the background feature mean (hidden features are mean-imputed).
struct Attribution {
  std::vector<std::string> gene_ids;
  std::vector<double> values;          // one Shapley value per feature
  std::vector<double> feature_values;  // the explained sample
  double base_value = 0.0;             // f(background mean)
  double prediction = 0.0;             // f(sample)
};

inline constexpr std::size_t kMaxExactFeatures = 12;

// Exhaustive subset enumeration; throws ScaleError beyond kMaxExactFeatures.
Attribution shapley_exact(const BatchFunction& model, const Tensor& background,
                          std::span<const double> sample,
                          std::vector<std::string> gene_ids = {});

// Monte Carlo over random feature orderings.
Attribution shapley_sampled(const BatchFunction& model, const Tensor& background,
                            std::span<const double> sample, std::size_t n_permutations,
                            std::uint64_t seed, std::vector<std::string> gene_ids = {});

Attribution shapley_exact(const ModelConfig& config, const ModelParams& params,
                          const Tensor& background, std::span<const double> sample,
                          std::vector<std::string> gene_ids = {});
Attribution shapley_sampled(const ModelConfig& config, const ModelParams& params,
                            const Tensor& background, std::span<const double> sample,
                            std::size_t n_permutations, std::uint64_t seed,
                            std::vector<std::string> gene_ids = {});

struct FeatureRank {
  std::string gene_id;
  double mean_abs = 0.0;
};

// Features by descending mean |value| over the attributions; ties by gene id.
std::vector<FeatureRank> rank_features(std::span<const Attribution> attributions,
                                       std::size_t top_k);

// Long format: sample, gene_id, shap_value, feature_value.
void write_attributions_csv(std::ostream& out, std::span<const Attribution> attributions);
void write_attributions_csv(const std::filesystem::path& path,
                            std::span<const Attribution> attributions);
// Columns: rank, gene_id, mean_abs_shap.
void write_ranking_csv(std::ostream& out, std::span<const FeatureRank> ranking);
void write_ranking_csv(const std::filesystem::path& path, std::span<const FeatureRank> ranking);

}  // namespace genemeta
