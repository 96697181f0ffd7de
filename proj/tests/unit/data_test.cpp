#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "genemeta/dataset.hpp"
#include "genemeta/error.hpp"
#include "test_support.hpp"

namespace genemeta {
namespace {

const std::filesystem::path kFixtures = GENEMETA_FIXTURE_DIR;

ExpressionDataset make_dataset(std::string name, std::vector<std::string> genes,
                               std::vector<std::vector<double>> rows, std::vector<int> labels) {
  ExpressionDataset ds;
  ds.name = std::move(name);
  ds.gene_ids = std::move(genes);
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  ds.matrix = Tensor({rows.size(), ds.gene_ids.size()}, std::move(flat));
  ds.labels = std::move(labels);
  return ds;
}

ExpressionDataset genes_only(std::string name, std::vector<std::string> genes) {
  std::vector<double> row(genes.size(), 0.0);
  return make_dataset(std::move(name), std::move(genes), {row}, {1});
}

ExpressionDataset random_dataset(std::size_t n, std::size_t d, std::size_t positives, Rng& rng) {
  ExpressionDataset ds;
  ds.name = "random";
  for (std::size_t g = 0; g < d; ++g) ds.gene_ids.push_back("g" + std::to_string(g));
  ds.matrix = testing::random_tensor({n, d}, rng, -3.0, 5.0);
  ds.labels.assign(n, 0);
  std::fill(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(positives), 1);
  std::shuffle(ds.labels.begin(), ds.labels.end(), rng);
  return ds;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(LoadExpression, GoldenFixture) {
  const ExpressionDataset ds = load_expression_tsv(kFixtures / "tiny.tsv");
  EXPECT_EQ(ds.name, "tiny");
  EXPECT_EQ(ds.matrix.shape(), (Shape{3, 4}));
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 0, 1}));
  EXPECT_EQ(ds.gene_ids, (std::vector<std::string>{"TP53", "EGFR", "KRAS", "ALK"}));
  EXPECT_EQ(ds.matrix.at(0, 3), 3.25);
  EXPECT_EQ(ds.matrix.at(2, 2), 1.5);
  EXPECT_NO_THROW(ds.validate());
}

TEST(LoadExpression, BadLabelNamesLine) {
  const std::string msg = error_of([] { load_expression_tsv(kFixtures / "bad_label.tsv"); });
  EXPECT_NE(msg.find("bad_label.tsv:3"), std::string::npos) << msg;
  EXPECT_THROW(load_expression_tsv(kFixtures / "bad_label.tsv"), ParseError);
}

TEST(LoadExpression, HeaderOnlyHasNoSamples) {
  const std::string msg = error_of([] { load_expression_tsv(kFixtures / "header_only.tsv"); });
  EXPECT_NE(msg.find("no samples"), std::string::npos) << msg;
}

TEST(LoadExpression, StructuralErrorsCarryPosition) {
  const std::string dup = error_of([] { load_expression_tsv(kFixtures / "duplicate_gene.tsv"); });
  EXPECT_NE(dup.find("duplicate_gene.tsv:1:4"), std::string::npos) << dup;
  const std::string cell = error_of([] { load_expression_tsv(kFixtures / "non_numeric.tsv"); });
  EXPECT_NE(cell.find("non_numeric.tsv:2:3"), std::string::npos) << cell;
  const std::string label = error_of([] { load_expression_tsv(kFixtures / "missing_label.tsv"); });
  EXPECT_NE(label.find("missing label column"), std::string::npos) << label;
  EXPECT_THROW(load_expression_tsv(kFixtures / "duplicate_gene.tsv"), ParseError);
  EXPECT_THROW(load_expression_tsv(kFixtures / "does_not_exist.tsv"), ParseError);
}

TEST(LoadExpression, WriteRoundTripIsExact) {
  Rng rng(4);
  const ExpressionDataset ds = random_dataset(7, 5, 3, rng);
  testing::TempDir dir;
  write_expression_tsv(dir / "random.tsv", ds);
  const ExpressionDataset back = load_expression_tsv(dir / "random.tsv");
  EXPECT_EQ(back.matrix, ds.matrix);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.gene_ids, ds.gene_ids);
}

TEST(LoadInteractions, CanonicalPairs) {
  const GeneInteractionSet set = load_interactions_tsv(kFixtures / "interactions.tsv");
  EXPECT_EQ(set.size(), 2u);
  EXPECT_TRUE(set.pairs().contains({"A", "B"}));
  EXPECT_TRUE(set.pairs().contains({"C", "D"}));
  EXPECT_TRUE(load_interactions_tsv(kFixtures / "empty_interactions.tsv").empty());
  EXPECT_THROW(load_interactions_tsv(kFixtures / "bad_interactions.tsv"), ParseError);
}

TEST(SelectCommonGenes, Examples) {
  const std::vector<ExpressionDataset> three{genes_only("a", {"A", "B", "C"}), genes_only("b", {"B", "C", "D"}),
                                             genes_only("c", {"C", "B"})};
  EXPECT_EQ(select_common_genes(three), (std::vector<std::string>{"B", "C"}));
  const std::vector<ExpressionDataset> one{genes_only("a", {"C", "A", "B"})};
  EXPECT_EQ(select_common_genes(one), (std::vector<std::string>{"A", "B", "C"}));
  const std::vector<ExpressionDataset> disjoint{genes_only("a", {"A"}), genes_only("b", {"B"})};
  EXPECT_THROW(select_common_genes(disjoint), SelectionError);
}

TEST(SelectCommonGenes, OrderInsensitive) {
  std::vector<ExpressionDataset> ds{genes_only("a", {"Q", "A", "B", "C", "Z"}), genes_only("b", {"B", "C", "D", "Z"}),
                                    genes_only("c", {"Z", "C", "B", "E"})};
  const auto expected = select_common_genes(ds);
  std::sort(ds.begin(), ds.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
  do {
    EXPECT_EQ(select_common_genes(ds), expected);
  } while (std::next_permutation(ds.begin(), ds.end(),
                                 [](const auto& x, const auto& y) { return x.name < y.name; }));
}

TEST(FilterByInteractions, Examples) {
  GeneInteractionSet set;
  set.add("B", "X");
  const std::vector<std::string> genes{"B", "C"};
  EXPECT_EQ(filter_by_interactions(genes, set), (std::vector<std::string>{"B"}));
  set.add("C", "Y");
  EXPECT_EQ(filter_by_interactions(genes, set), genes);
  GeneInteractionSet unrelated;
  unrelated.add("P", "Q");
  EXPECT_THROW(filter_by_interactions(genes, unrelated), SelectionError);
}

TEST(Project, Examples) {
  const ExpressionDataset ds = load_expression_tsv(kFixtures / "tiny.tsv");
  EXPECT_EQ(project(ds, ds.gene_ids).matrix, ds.matrix);
  const std::vector<std::string> two{"KRAS", "TP53"};
  const ExpressionDataset p = project(ds, two);
  EXPECT_EQ(p.matrix.shape(), (Shape{3, 2}));
  EXPECT_EQ(p.labels, ds.labels);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(p.matrix.at(r, 0), ds.matrix.at(r, 2));
    EXPECT_EQ(p.matrix.at(r, 1), ds.matrix.at(r, 0));
  }
  const std::vector<std::string> unknown{"BRCA1"};
  const std::string msg = error_of([&] { project(ds, unknown); });
  EXPECT_NE(msg.find("BRCA1"), std::string::npos);
  EXPECT_THROW(project(ds, unknown), SelectionError);
}

TEST(Project, Idempotent) {
  const ExpressionDataset ds = load_expression_tsv(kFixtures / "tiny.tsv");
  const std::vector<std::string> genes{"ALK", "EGFR"};
  const ExpressionDataset once = project(ds, genes);
  const ExpressionDataset twice = project(once, genes);
  EXPECT_EQ(once.matrix, twice.matrix);
  EXPECT_EQ(once.gene_ids, twice.gene_ids);
}

TEST(Normalization, HandComputedColumn) {
  const ExpressionDataset ds = make_dataset("d", {"A", "B"}, {{1, 5}, {2, 5}, {3, 5}}, {1, 0, 1});
  const NormalizationStats stats = fit_normalization(ds);
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.0);
  EXPECT_NEAR(stats.stddev[0], std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(stats.stddev[0], 0.8165, 1e-4);
  EXPECT_EQ(stats.stddev[1], 1.0);

  const ExpressionDataset z = apply_normalization(ds, stats);
  EXPECT_NEAR(z.matrix.at(0, 0), -1.2247, 1e-4);
  EXPECT_NEAR(z.matrix.at(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(z.matrix.at(2, 0), 1.2247, 1e-4);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(z.matrix.at(r, 1), 0.0);
}

TEST(Normalization, IdentityStatsAndShape) {
  Rng rng(9);
  const ExpressionDataset a = random_dataset(6, 4, 2, rng);
  const ExpressionDataset b = random_dataset(9, 4, 3, rng);
  NormalizationStats unit{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
  EXPECT_EQ(apply_normalization(a, unit).matrix, a.matrix);
  EXPECT_EQ(apply_normalization(b, fit_normalization(a)).matrix.shape(), b.matrix.shape());
  NormalizationStats narrow{std::vector<double>(3, 0.0), std::vector<double>(3, 1.0)};
  EXPECT_THROW(apply_normalization(a, narrow), DimensionError);
}

TEST(Normalization, NeedsTwoSamples) {
  const ExpressionDataset one = make_dataset("d", {"A"}, {{1}}, {1});
  EXPECT_THROW(fit_normalization(one), StatisticsError);
}

TEST(Normalization, FitApplyGivesZeroMeanUnitStd) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    ExpressionDataset ds = random_dataset(5 + trial, 6, 2, rng);
    for (std::size_t r = 0; r < ds.samples(); ++r) ds.matrix.at(r, 3) = 7.5;  // degenerate
    const ExpressionDataset z = apply_normalization(ds, fit_normalization(ds));
    const NormalizationStats again = fit_normalization(z);
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_LT(std::abs(again.mean[c]), 1e-9);
      if (c != 3) EXPECT_NEAR(again.stddev[c], 1.0, 1e-9);
    }
  }
}

void expect_valid_split(const FoldSplit& split, const std::vector<int>& labels, std::size_t k) {
  ASSERT_EQ(split.size(), k);
  const std::size_t n = labels.size();
  const std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  std::vector<int> seen(n, 0);
  for (std::size_t f = 0; f < k; ++f) {
    const auto& fold = split.test_indices(f);
    std::size_t fold_pos = 0;
    for (std::size_t i : fold) {
      ASSERT_LT(i, n);
      ++seen[i];
      fold_pos += labels[i] == 1;
    }
    // Fold sizes differ by at most one and positives track proportional allocation.
    EXPECT_LE(fold.size(), n / k + 1);
    EXPECT_GE(fold.size(), n / k);
    const double proportional = static_cast<double>(fold.size()) * static_cast<double>(positives) /
                                static_cast<double>(n);
    EXPECT_LE(std::abs(static_cast<double>(fold_pos) - proportional), 1.0 + 1e-12)
        << "fold " << f << " has " << fold_pos << " positives, proportional " << proportional;

    auto train = split.train_indices(f);
    EXPECT_EQ(train.size() + fold.size(), n);
    EXPECT_TRUE(std::is_sorted(train.begin(), train.end()));
    std::vector<std::size_t> all(train);
    all.insert(all.end(), fold.begin(), fold.end());
    std::sort(all.begin(), all.end());
    EXPECT_TRUE(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(StratifiedKFold, ExactStratification) {
  std::vector<int> labels(100, 0);
  std::fill(labels.begin(), labels.begin() + 50, 1);
  const FoldSplit split = stratified_kfold(labels, 10, 42);
  expect_valid_split(split, labels, 10);
  for (std::size_t f = 0; f < 10; ++f) {
    const auto& fold = split.test_indices(f);
    EXPECT_EQ(fold.size(), 10u);
    EXPECT_EQ(std::count_if(fold.begin(), fold.end(), [&](std::size_t i) { return labels[i] == 1; }), 5);
  }
  EXPECT_FALSE(split.relaxed);
}

TEST(StratifiedKFold, Deterministic) {
  Rng rng(1);
  const ExpressionDataset ds = random_dataset(40, 2, 13, rng);
  EXPECT_EQ(stratified_kfold(ds, 5, 7).folds, stratified_kfold(ds, 5, 7).folds);
  EXPECT_NE(stratified_kfold(ds, 5, 7).folds, stratified_kfold(ds, 5, 8).folds);
}

TEST(StratifiedKFold, SmallPositiveClassBruteForce) {
  // 95 samples with 8 positives, k = 10.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const ExpressionDataset ds = random_dataset(95, 1, 8, rng);
    const FoldSplit split = stratified_kfold(ds, 10, seed);
    expect_valid_split(split, ds.labels, 10);
    EXPECT_TRUE(split.relaxed);
    for (const auto& fold : split.folds) {
      EXPECT_GE(fold.size(), 9u);
      EXPECT_LE(fold.size(), 10u);
    }
  }
}

TEST(StratifiedKFold, RandomShapes) {
  Rng rng(77);
  std::uniform_int_distribution<std::size_t> size(2, 120);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = size(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(n, 12))(rng);
    const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, n)(rng);
    const ExpressionDataset ds = random_dataset(n, 1, pos, rng);
    expect_valid_split(stratified_kfold(ds, k, static_cast<std::uint64_t>(trial)), ds.labels, k);
  }
}

TEST(StratifiedKFold, Errors) {
  const std::vector<int> labels{1, 0, 1};
  EXPECT_THROW(stratified_kfold(labels, 4, 0), SplitError);
  EXPECT_THROW(stratified_kfold(labels, 1, 0), ContractError);
}

ExpressionDataset indexed_dataset(std::size_t n) {
  ExpressionDataset ds;
  ds.name = "indexed";
  ds.gene_ids = {"idx"};
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 0.0);
  ds.matrix = Tensor({n, 1}, v);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(i % 2));
  return ds;
}

std::vector<std::size_t> drawn(const Batch& b) {
  std::vector<std::size_t> out;
  for (double v : b.x.data()) out.push_back(static_cast<std::size_t>(v));
  return out;
}

TEST(SampleBatch, FullSizeIsPermutation) {
  const ExpressionDataset ds = indexed_dataset(17);
  Rng rng(5);
  auto idx = drawn(sample_batch(ds, 17, rng));
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < 17; ++i) EXPECT_EQ(idx[i], i);
}

TEST(SampleBatch, LabelsFollowRows) {
  const ExpressionDataset ds = indexed_dataset(11);
  Rng rng(6);
  const Batch b = sample_batch(ds, 6, rng);
  ASSERT_EQ(b.x.shape(), (Shape{6, 1}));
  ASSERT_EQ(b.y.shape(), (Shape{6}));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(b.y[i], static_cast<double>(static_cast<std::size_t>(b.x[i]) % 2));
}

TEST(SampleBatch, Reproducible) {
  const ExpressionDataset ds = indexed_dataset(30);
  Rng a(8), b(8);
  EXPECT_EQ(sample_batch(ds, 7, a).x, sample_batch(ds, 7, b).x);
}

TEST(SampleBatch, WithoutReplacementWhenItFits) {
  const ExpressionDataset ds = indexed_dataset(12);
  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    auto idx = drawn(sample_batch(ds, 9, rng));
    std::sort(idx.begin(), idx.end());
    EXPECT_TRUE(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
  }
}

TEST(SampleBatch, OversizedDrawsWithReplacement) {
  const ExpressionDataset ds = indexed_dataset(5);
  Rng rng(12);
  const Batch b = sample_batch(ds, 20, rng);
  EXPECT_EQ(b.x.dim(0), 20u);
  for (std::size_t i : drawn(b)) EXPECT_LT(i, 5u);
}

TEST(SampleBatch, ZeroSizeIsContractError) {
  const ExpressionDataset ds = indexed_dataset(5);
  Rng rng(1);
  EXPECT_THROW(sample_batch(ds, 0, rng), ContractError);
}

TEST(SampleBatch, EmpiricalFrequencyIsUniform) {
  // Each index lands in a batch with probability size/N, so its count over
  // `trials` batches is Binomial(trials, size/N).
  constexpr std::size_t n = 20, size = 5, trials = 10000;
  const ExpressionDataset ds = indexed_dataset(n);
  Rng rng(2024);
  std::vector<double> counts(n, 0.0);
  for (std::size_t t = 0; t < trials; ++t)
    for (std::size_t i : drawn(sample_batch(ds, size, rng))) counts[i] += 1.0;
  const double p = static_cast<double>(size) / n;
  const double expected = trials * p;
  const double sigma = std::sqrt(trials * p * (1.0 - p));
  for (std::size_t i = 0; i < n; ++i) EXPECT_LE(std::abs(counts[i] - expected), 3.0 * sigma) << "index " << i;

  // With replacement: each of the size*trials draws is uniform over N.
  std::vector<double> rep(n, 0.0);
  for (std::size_t t = 0; t < trials / 10; ++t)
    for (std::size_t i : drawn(sample_batch(ds, 50, rng))) rep[i] += 1.0;
  const double draws = 50.0 * (trials / 10);
  const double q = 1.0 / n;
  for (std::size_t i = 0; i < n; ++i)
    EXPECT_LE(std::abs(rep[i] - draws * q), 3.0 * std::sqrt(draws * q * (1 - q))) << "index " << i;
}

TEST(Concatenate, StacksRows) {
  const ExpressionDataset a = make_dataset("a", {"A", "B"}, {{1, 2}}, {1});
  const ExpressionDataset b = make_dataset("b", {"A", "B"}, {{3, 4}, {5, 6}}, {0, 1});
  const std::vector<ExpressionDataset> both{a, b};
  const ExpressionDataset c = concatenate(both, "pooled");
  EXPECT_EQ(c.matrix, Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(c.labels, (std::vector<int>{1, 0, 1}));
  const std::vector<ExpressionDataset> mismatched{a, make_dataset("c", {"B", "A"}, {{1, 2}}, {1})};
  EXPECT_THROW(concatenate(mismatched, "x"), ContractError);
}

}  // namespace
}  // namespace genemeta
