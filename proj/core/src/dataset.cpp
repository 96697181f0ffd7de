#include "genemeta/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "genemeta/error.hpp"

namespace genemeta {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cells.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

ParseError parse_error(const std::filesystem::path& path, std::size_t line, std::size_t column,
                       const std::string& what) {
  std::string where = path.string() + ":" + std::to_string(line);
  if (column) where += ":" + std::to_string(column);
  return ParseError(where + ": " + what);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::size_t ExpressionDataset::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void ExpressionDataset::validate() const {
  if (matrix.rank() != 2 || matrix.dim(0) != labels.size() || matrix.dim(1) != gene_ids.size()) {
    throw ContractError("dataset '" + name + "': matrix " + shape_string(matrix.shape()) +
                        " does not match " + std::to_string(labels.size()) + " labels x " +
                        std::to_string(gene_ids.size()) + " genes");
  }
  for (int y : labels)
    if (y != 0 && y != 1) throw ContractError("dataset '" + name + "': label outside {0,1}");
  std::unordered_set<std::string> seen;
  for (const auto& g : gene_ids)
    if (!seen.insert(g).second) throw ContractError("dataset '" + name + "': duplicate gene " + g);
}

Tensor ExpressionDataset::label_tensor() const {
  return Tensor::vector(std::vector<double>(labels.begin(), labels.end()));
}

void GeneInteractionSet::add(const std::string& a, const std::string& b) {
  pairs_.insert(a < b ? std::pair{a, b} : std::pair{b, a});
  genes_.insert(a);
  genes_.insert(b);
}

std::vector<std::size_t> FoldSplit::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f == fold) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExpressionDataset load_expression_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");

  ExpressionDataset ds;
  ds.name = path.stem().string();
  std::string line;
  if (!std::getline(in, line)) throw parse_error(path, 1, 0, "missing header");
  strip_cr(line);
  const auto header = split_tabs(line);
  if (header.size() < 3 || header.front() != "sample_id") {
    throw parse_error(path, 1, 1, "header must start with 'sample_id'");
  }
  if (header.back() != "label") throw parse_error(path, 1, header.size(), "missing label column");
  std::unordered_set<std::string> seen;
  for (std::size_t c = 1; c + 1 < header.size(); ++c) {
    std::string gene(header[c]);
    if (gene.empty()) throw parse_error(path, 1, c + 1, "empty gene identifier");
    if (!seen.insert(gene).second) throw parse_error(path, 1, c + 1, "duplicate gene column '" + gene + "'");
    ds.gene_ids.push_back(std::move(gene));
  }

  const std::size_t genes = ds.gene_ids.size();
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != header.size()) {
      throw parse_error(path, line_no, 0,
                        "expected " + std::to_string(header.size()) + " cells, found " +
                            std::to_string(cells.size()));
    }
    for (std::size_t c = 1; c <= genes; ++c) {
      const auto cell = cells[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw parse_error(path, line_no, c + 1, "non-numeric expression value '" + std::string(cell) + "'");
      }
      values.push_back(v);
    }
    const auto label = cells.back();
    if (label != "0" && label != "1") {
      throw parse_error(path, line_no, cells.size(), "label '" + std::string(label) + "' is not 0 or 1");
    }
    ds.labels.push_back(label == "1" ? 1 : 0);
  }
  if (ds.labels.empty()) throw parse_error(path, line_no, 0, "no samples");
  ds.matrix = Tensor({ds.labels.size(), genes}, std::move(values));
  return ds;
}

void write_expression_tsv(const std::filesystem::path& path, const ExpressionDataset& ds) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "sample_id";
  for (const auto& g : ds.gene_ids) out << '\t' << g;
  out << "\tlabel\n";
  for (std::size_t r = 0; r < ds.samples(); ++r) {
    out << ds.name << "_s" << r;
    for (double v : ds.matrix.row(r)) out << '\t' << format_double(v);
    out << '\t' << ds.labels[r] << '\n';
  }
}

GeneInteractionSet load_interactions_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  GeneInteractionSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split_tabs(line);
    if (cells.size() != 2 || cells[0].empty() || cells[1].empty()) {
      throw parse_error(path, line_no, 0,
                        "expected 2 gene symbols, found " + std::to_string(cells.size()) + " cells");
    }
    set.add(std::string(cells[0]), std::string(cells[1]));
  }
  return set;
}

std::vector<std::string> select_common_genes(std::span<const ExpressionDataset> datasets) {
  if (datasets.empty()) throw SelectionError("gene selection needs at least one dataset");
  std::vector<std::string> common(datasets[0].gene_ids);
  std::sort(common.begin(), common.end());
  for (std::size_t i = 1; i < datasets.size(); ++i) {
    std::vector<std::string> other(datasets[i].gene_ids);
    std::sort(other.begin(), other.end());
    std::vector<std::string> next;
    std::set_intersection(common.begin(), common.end(), other.begin(), other.end(),
                          std::back_inserter(next));
    common = std::move(next);
  }
  if (common.empty()) throw SelectionError("empty intersection of gene sets across datasets");
  return common;
}

std::vector<std::string> filter_by_interactions(std::span<const std::string> genes,
                                                const GeneInteractionSet& interactions) {
  std::vector<std::string> kept;
  for (const auto& g : genes)
    if (interactions.involves(g)) kept.push_back(g);
  if (kept.empty()) throw SelectionError("no selected gene takes part in any interaction");
  return kept;
}

ExpressionDataset project(const ExpressionDataset& ds, std::span<const std::string> genes) {
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < ds.genes(); ++c) column.emplace(ds.gene_ids[c], c);
  std::vector<std::size_t> source_cols;
  source_cols.reserve(genes.size());
  for (const auto& g : genes) {
    auto it = column.find(g);
    if (it == column.end()) throw SelectionError("dataset '" + ds.name + "' has no gene '" + g + "'");
    source_cols.push_back(it->second);
  }
  ExpressionDataset out;
  out.name = ds.name;
  out.gene_ids.assign(genes.begin(), genes.end());
  out.labels = ds.labels;
  out.matrix = Tensor({ds.samples(), genes.size()});
  for (std::size_t r = 0; r < ds.samples(); ++r)
    for (std::size_t c = 0; c < genes.size(); ++c) out.matrix.at(r, c) = ds.matrix.at(r, source_cols[c]);
  return out;
}

ExpressionDataset subset(const ExpressionDataset& ds, std::span<const std::size_t> rows) {
  ExpressionDataset out;
  out.name = ds.name;
  out.gene_ids = ds.gene_ids;
  out.matrix = Tensor({rows.size(), ds.genes()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = ds.matrix.row(rows[i]);
    std::copy(src.begin(), src.end(), out.matrix.data().begin() + static_cast<std::ptrdiff_t>(i * ds.genes()));
    out.labels.push_back(ds.labels.at(rows[i]));
  }
  return out;
}

ExpressionDataset concatenate(std::span<const ExpressionDataset> datasets, std::string name) {
  if (datasets.empty()) throw ContractError("concatenate: no datasets");
  ExpressionDataset out;
  out.name = std::move(name);
  out.gene_ids = datasets[0].gene_ids;
  std::vector<double> values;
  for (const auto& ds : datasets) {
    if (ds.gene_ids != out.gene_ids) throw ContractError("concatenate: gene lists differ for '" + ds.name + "'");
    values.insert(values.end(), ds.matrix.data().begin(), ds.matrix.data().end());
    out.labels.insert(out.labels.end(), ds.labels.begin(), ds.labels.end());
  }
  out.matrix = Tensor({out.labels.size(), out.gene_ids.size()}, std::move(values));
  return out;
}

NormalizationStats fit_normalization(const ExpressionDataset& ds) {
  const std::size_t n = ds.samples(), d = ds.genes();
  if (n < 2) throw StatisticsError("normalisation needs at least 2 samples, dataset '" + ds.name + "' has " + std::to_string(n));
  NormalizationStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) stats.mean[c] += ds.matrix.at(r, c);
  for (double& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = ds.matrix.at(r, c) - stats.mean[c];
      stats.stddev[c] += dev * dev;
    }
  for (double& s : stats.stddev) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  return stats;
}

ExpressionDataset apply_normalization(const ExpressionDataset& ds, const NormalizationStats& stats) {
  if (stats.mean.size() != ds.genes() || stats.stddev.size() != ds.genes()) {
    throw DimensionError("normalisation stats of width " + std::to_string(stats.mean.size()) +
                         " applied to dataset '" + ds.name + "' with " + std::to_string(ds.genes()) + " genes");
  }
  ExpressionDataset out = ds;
  for (std::size_t r = 0; r < ds.samples(); ++r)
    for (std::size_t c = 0; c < ds.genes(); ++c)
      out.matrix.at(r, c) = (ds.matrix.at(r, c) - stats.mean[c]) / stats.stddev[c];
  return out;
}

FoldSplit stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ContractError("stratified_kfold: k must be >= 2");
  if (k > labels.size()) {
    throw SplitError("cannot split " + std::to_string(labels.size()) + " samples into " +
                     std::to_string(k) + " folds");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  Rng rng(derive_seed(seed, kFoldStream));
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  // Dealing positives then negatives round-robin keeps both the per-class and
  // the total counts within one of each other across folds.
  FoldSplit split;
  split.folds.resize(k);
  split.relaxed = (!pos.empty() && pos.size() < k) || (!neg.empty() && neg.size() < k);
  std::size_t slot = 0;
  for (const auto* cls : {&pos, &neg})
    for (std::size_t idx : *cls) split.folds[slot++ % k].push_back(idx);
  for (auto& f : split.folds) std::sort(f.begin(), f.end());
  return split;
}

Batch gather_batch(const ExpressionDataset& ds, std::span<const std::size_t> rows) {
  Batch b{Tensor({rows.size(), ds.genes()}), Tensor({rows.size()})};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = ds.matrix.row(rows[i]);
    std::copy(src.begin(), src.end(), b.x.data().begin() + static_cast<std::ptrdiff_t>(i * ds.genes()));
    b.y[i] = ds.labels[rows[i]];
  }
  return b;
}

Batch sample_batch(const ExpressionDataset& ds, std::size_t size, Rng& rng) {
  if (size == 0) throw ContractError("sample_batch: batch size must be >= 1");
  const std::size_t n = ds.samples();
  if (n == 0) throw ContractError("sample_batch: dataset '" + ds.name + "' is empty");
  std::vector<std::size_t> rows;
  if (size <= n) {
    // Partial Fisher-Yates: the first `size` slots become a uniform draw.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < size; ++i) rows.push_back(pick(rng));
  }
  return gather_batch(ds, rows);
}

}  // namespace genemeta
