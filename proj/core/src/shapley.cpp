#include "genemeta/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "genemeta/error.hpp"
#include "genemeta/rng.hpp"

namespace genemeta {
namespace {

std::vector<double> column_means(const Tensor& background, std::size_t features) {
  if (background.rank() != 2 || background.dim(0) == 0) {
    throw ContractError("shapley: background must be a non-empty [rows, features] matrix");
  }
  if (background.dim(1) != features) {
    throw DimensionError("shapley: background has " + std::to_string(background.dim(1)) +
                         " features, sample has " + std::to_string(features));
  }
  const std::size_t rows = background.dim(0);
  std::vector<double> mean(features, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < features; ++c) mean[c] += background.at(r, c);
  for (double& m : mean) m /= static_cast<double>(rows);
  return mean;
}

std::vector<std::string> default_ids(std::vector<std::string> ids, std::size_t features) {
  if (ids.empty()) {
    for (std::size_t i = 0; i < features; ++i) ids.push_back("f" + std::to_string(i));
  }
  if (ids.size() != features) throw DimensionError("shapley: gene id count does not match features");
  return ids;
}

std::vector<double> evaluate(const BatchFunction& model, Tensor batch) {
  const std::size_t rows = batch.dim(0);
  std::vector<double> out = model(batch);
  if (out.size() != rows) throw DimensionError("shapley: model returned wrong number of outputs");
  return out;
}

Attribution make_attribution(std::vector<std::string> ids, std::span<const double> sample) {
  Attribution a;
  a.gene_ids = std::move(ids);
  a.feature_values.assign(sample.begin(), sample.end());
  a.values.assign(sample.size(), 0.0);
  return a;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

BatchFunction model_function(const ModelConfig& config, const ModelParams& params) {
  return [config, params](const Tensor& batch) {
    const Tensor scores = predict(config, params, batch);
    return std::vector<double>(scores.data().begin(), scores.data().end());
  };
}

Attribution shapley_exact(const BatchFunction& model, const Tensor& background,
                          std::span<const double> sample, std::vector<std::string> gene_ids) {
  const std::size_t d = sample.size();
  if (d > kMaxExactFeatures) {
    throw ScaleError("exact Shapley enumeration supports at most " +
                     std::to_string(kMaxExactFeatures) + " features, got " + std::to_string(d));
  }
  const std::vector<double> mean = column_means(background, d);
  Attribution out = make_attribution(default_ids(std::move(gene_ids), d), sample);

  // v(S) for every subset S, encoded as a bit mask of revealed features.
  const std::size_t subsets = std::size_t{1} << d;
  Tensor batch({subsets, d});
  for (std::size_t mask = 0; mask < subsets; ++mask)
    for (std::size_t i = 0; i < d; ++i) batch.at(mask, i) = (mask >> i & 1U) ? sample[i] : mean[i];
  const std::vector<double> value = evaluate(model, std::move(batch));

  // weight[s] = s! (d - s - 1)! / d!
  std::vector<double> weight(d, 0.0);
  for (std::size_t s = 0; s < d; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                         std::lgamma(static_cast<double>(d - s)) -
                         std::lgamma(static_cast<double>(d) + 1.0));
  }
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (value[mask | bit] - value[mask]);
    }
    out.values[i] = phi;
  }
  out.base_value = value[0];
  out.prediction = value[subsets - 1];
  return out;
}

Attribution shapley_sampled(const BatchFunction& model, const Tensor& background,
                            std::span<const double> sample, std::size_t n_permutations,
                            std::uint64_t seed, std::vector<std::string> gene_ids) {
  if (n_permutations == 0) throw ContractError("shapley: n_permutations must be >= 1");
  const std::size_t d = sample.size();
  const std::vector<double> mean = column_means(background, d);
  Attribution out = make_attribution(default_ids(std::move(gene_ids), d), sample);

  Rng rng(derive_seed(seed, kShapleyStream));
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  constexpr std::size_t kChunk = 256;  // permutations per model call
  std::vector<std::size_t> orders;
  for (std::size_t done = 0; done < n_permutations;) {
    const std::size_t chunk = std::min(kChunk, n_permutations - done);
    Tensor batch({chunk * (d + 1), d});
    orders.clear();
    for (std::size_t p = 0; p < chunk; ++p) {
      std::shuffle(order.begin(), order.end(), rng);
      orders.insert(orders.end(), order.begin(), order.end());
      // Row k of this permutation reveals its first k features.
      std::vector<double> row(mean);
      const std::size_t base = p * (d + 1);
      for (std::size_t k = 0; k <= d; ++k) {
        if (k) row[order[k - 1]] = sample[order[k - 1]];
        std::copy(row.begin(), row.end(), batch.data().begin() + static_cast<std::ptrdiff_t>((base + k) * d));
      }
    }
    const std::vector<double> value = evaluate(model, std::move(batch));
    for (std::size_t p = 0; p < chunk; ++p) {
      const std::size_t base = p * (d + 1);
      for (std::size_t k = 1; k <= d; ++k) {
        out.values[orders[p * d + k - 1]] += value[base + k] - value[base + k - 1];
      }
      if (done == 0 && p == 0) {
        out.base_value = value[base];
        out.prediction = value[base + d];
      }
    }
    done += chunk;
  }
  for (double& v : out.values) v /= static_cast<double>(n_permutations);
  return out;
}

Attribution shapley_exact(const ModelConfig& config, const ModelParams& params,
                          const Tensor& background, std::span<const double> sample,
                          std::vector<std::string> gene_ids) {
  return shapley_exact(model_function(config, params), background, sample, std::move(gene_ids));
}

Attribution shapley_sampled(const ModelConfig& config, const ModelParams& params,
                            const Tensor& background, std::span<const double> sample,
                            std::size_t n_permutations, std::uint64_t seed,
                            std::vector<std::string> gene_ids) {
  return shapley_sampled(model_function(config, params), background, sample, n_permutations, seed,
                         std::move(gene_ids));
}

std::vector<FeatureRank> rank_features(std::span<const Attribution> attributions,
                                       std::size_t top_k) {
  if (top_k == 0) throw ContractError("rank_features: top_k must be >= 1");
  if (attributions.empty()) return {};
  const auto& ids = attributions.front().gene_ids;
  std::vector<FeatureRank> ranks;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double total = 0.0;
    for (const auto& a : attributions) {
      if (a.gene_ids != ids) throw ContractError("rank_features: attributions use different genes");
      total += std::abs(a.values[i]);
    }
    ranks.push_back({ids[i], total / static_cast<double>(attributions.size())});
  }
  std::sort(ranks.begin(), ranks.end(), [](const FeatureRank& a, const FeatureRank& b) {
    if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
    return a.gene_id < b.gene_id;
  });
  if (ranks.size() > top_k) ranks.resize(top_k);
  return ranks;
}

void write_attributions_csv(std::ostream& out, std::span<const Attribution> attributions) {
  out << "sample,gene_id,shap_value,feature_value\n";
  for (std::size_t s = 0; s < attributions.size(); ++s) {
    const auto& a = attributions[s];
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      out << s << ',' << a.gene_ids[i] << ',' << fmt(a.values[i]) << ',' << fmt(a.feature_values[i])
          << '\n';
    }
  }
}

void write_attributions_csv(const std::filesystem::path& path,
                            std::span<const Attribution> attributions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_attributions_csv(out, attributions);
}

void write_ranking_csv(std::ostream& out, std::span<const FeatureRank> ranking) {
  out << "rank,gene_id,mean_abs_shap\n";
  for (std::size_t i = 0; i < ranking.size(); ++i)
    out << i + 1 << ',' << ranking[i].gene_id << ',' << fmt(ranking[i].mean_abs) << '\n';
}

void write_ranking_csv(const std::filesystem::path& path, std::span<const FeatureRank> ranking) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_ranking_csv(out, ranking);
}

}  // namespace genemeta
