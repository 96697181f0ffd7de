#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "genemeta/rng.hpp"
#include "genemeta/tensor.hpp"

namespace genemeta {

// Samples x genes expression matrix with binary labels (1 = cancer).
struct ExpressionDataset {
  std::string name;
  std::vector<std::string> gene_ids;
  Tensor matrix;  // [samples, genes]
  std::vector<int> labels;

  std::size_t samples() const noexcept { return labels.size(); }
  std::size_t genes() const noexcept { return gene_ids.size(); }
  std::size_t positives() const noexcept;

  // Throws ContractError if the shape/label/unique-id invariants are broken.
  void validate() const;
  Tensor label_tensor() const;
};

// Undirected gene pairs, stored with the lexicographically smaller symbol first.
class GeneInteractionSet {
 public:
  void add(const std::string& a, const std::string& b);
  bool involves(const std::string& gene) const { return genes_.contains(gene); }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const std::set<std::pair<std::string, std::string>>& pairs() const noexcept { return pairs_; }

 private:
  std::set<std::pair<std::string, std::string>> pairs_;
  std::set<std::string> genes_;
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; degenerate (zero) entries replaced by 1
};

// Held-out folds; the training set of fold i is every index outside folds[i].
struct FoldSplit {
  std::vector<std::vector<std::size_t>> folds;
  // Set when some class had fewer members than folds, so some folds miss it.
  bool relaxed = false;

  std::size_t size() const noexcept { return folds.size(); }
  const std::vector<std::size_t>& test_indices(std::size_t fold) const { return folds.at(fold); }
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

struct Batch {
  Tensor x;  // [size, genes]
  Tensor y;  // [size]
};

// Expression TSV: header `sample_id <genes...> label`, one sample per row.
ExpressionDataset load_expression_tsv(const std::filesystem::path& path);
void write_expression_tsv(const std::filesystem::path& path, const ExpressionDataset& dataset);

// Two tab-separated gene symbols per line; `#` starts a comment line.
GeneInteractionSet load_interactions_tsv(const std::filesystem::path& path);

// Genes present in every dataset, sorted lexicographically.
std::vector<std::string> select_common_genes(std::span<const ExpressionDataset> datasets);
// Genes that take part in at least one interaction; input order kept.
std::vector<std::string> filter_by_interactions(std::span<const std::string> genes,
                                                const GeneInteractionSet& interactions);
ExpressionDataset project(const ExpressionDataset& dataset, std::span<const std::string> genes);
ExpressionDataset subset(const ExpressionDataset& dataset, std::span<const std::size_t> rows);
// Row-wise concatenation of datasets sharing one gene list.
ExpressionDataset concatenate(std::span<const ExpressionDataset> datasets, std::string name);

NormalizationStats fit_normalization(const ExpressionDataset& dataset);
ExpressionDataset apply_normalization(const ExpressionDataset& dataset,
                                      const NormalizationStats& stats);

FoldSplit stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);
inline FoldSplit stratified_kfold(const ExpressionDataset& dataset, std::size_t k,
                                  std::uint64_t seed) {
  return stratified_kfold(dataset.labels, k, seed);
}

// `size` rows drawn uniformly; without replacement when size <= samples,
// with replacement otherwise.
Batch sample_batch(const ExpressionDataset& dataset, std::size_t size, Rng& rng);
Batch gather_batch(const ExpressionDataset& dataset, std::span<const std::size_t> rows);

}  // namespace genemeta
