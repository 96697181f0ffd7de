#include "genemeta/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "genemeta/error.hpp"
#include "genemeta/rng.hpp"

namespace genemeta {
namespace {

constexpr double kInteraction = 0.2;
constexpr double kMaxAngle = std::numbers::pi / 3.0;
constexpr double kShiftScale = 0.5;

struct LabelRule {
  std::vector<double> w;  // unit norm over the signal coordinates

  double score(const std::vector<double>& z) const {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * z[i];
    if (w.size() >= 2) s += kInteraction * z[0] * z[1];
    return s;
  }
};

// Givens rotations pairing each signal coordinate with a distinct
// non-signal coordinate, followed by a constant offset.
struct TaskView {
  std::vector<std::size_t> partner;
  std::vector<double> cos_t, sin_t;
  std::vector<double> shift;

  std::vector<double> observe(std::vector<double> z) const {
    for (std::size_t i = 0; i < partner.size(); ++i) {
      const double a = z[i], b = z[partner[i]];
      z[i] = cos_t[i] * a - sin_t[i] * b;
      z[partner[i]] = sin_t[i] * a + cos_t[i] * b;
    }
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += shift[i];
    return z;
  }
};

TaskView make_view(const SynthSpec& spec, Rng& rng) {
  TaskView v;
  std::vector<std::size_t> others(spec.features - spec.signal_dim);
  std::iota(others.begin(), others.end(), spec.signal_dim);
  std::shuffle(others.begin(), others.end(), rng);
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < spec.signal_dim; ++i) {
    const double angle = spec.perturbation * kMaxAngle * magnitude(rng) * (sign(rng) ? 1.0 : -1.0);
    v.partner.push_back(others[i]);
    v.cos_t.push_back(std::cos(angle));
    v.sin_t.push_back(std::sin(angle));
  }
  for (std::size_t i = 0; i < spec.features; ++i)
    v.shift.push_back(spec.perturbation * kShiftScale * gauss(rng));
  return v;
}

std::string gene_name(std::size_t i, std::size_t total) {
  const int width = static_cast<int>(std::to_string(total).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "G%0*zu", width, i + 1);
  return buf;
}

ExpressionDataset sample_task(const SynthSpec& spec, const LabelRule& rule, std::string name,
                              std::size_t samples, std::uint64_t task_index) {
  Rng rng(derive_seed(spec.seed, kSynthStream, task_index + 1));
  const TaskView view = make_view(spec, rng);
  // Exactly round(balance * samples) positives, in random order.
  std::vector<bool> wanted(samples, false);
  const auto n_pos = static_cast<std::size_t>(std::llround(spec.balance * static_cast<double>(samples)));
  std::fill_n(wanted.begin(), std::min(n_pos, samples), true);
  std::shuffle(wanted.begin(), wanted.end(), rng);
  std::bernoulli_distribution flip(spec.noise);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ExpressionDataset ds;
  ds.name = std::move(name);
  for (std::size_t g = 0; g < spec.features; ++g) ds.gene_ids.push_back(gene_name(g, spec.features));
  std::vector<double> values;
  values.reserve(samples * spec.features);
  std::vector<double> z(spec.features);
  for (std::size_t s = 0; s < samples; ++s) {
    const bool want = wanted[s];
    // Rejection sampling keeps the label a function of z.
    do {
      for (double& zi : z) zi = gauss(rng);
    } while ((rule.score(z) > 0.0) != want);
    const std::vector<double> x = view.observe(z);
    values.insert(values.end(), x.begin(), x.end());
    ds.labels.push_back((want != flip(rng)) ? 1 : 0);
  }
  ds.matrix = Tensor({samples, spec.features}, std::move(values));
  return ds;
}

}  // namespace

void SynthSpec::validate() const {
  if (sources == 0 || source_samples == 0 || target_samples == 0 || features == 0 || signal_dim == 0) {
    throw ContractError("synth: counts must be positive");
  }
  if (2 * signal_dim > features) {
    throw ContractError("synth: features must be at least twice the signal dimension");
  }
  if (!(noise >= 0.0 && noise < 0.5)) throw ContractError("synth: noise must lie in [0, 0.5)");
  if (!(balance > 0.0 && balance < 1.0)) throw ContractError("synth: balance must lie in (0, 1)");
  if (!(perturbation >= 0.0) || !std::isfinite(perturbation)) {
    throw ContractError("synth: perturbation must be finite and non-negative");
  }
}

TaskFamily generate_task_family(const SynthSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, kSynthStream, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  LabelRule rule;
  double norm = 0.0;
  for (std::size_t i = 0; i < spec.signal_dim; ++i) {
    rule.w.push_back(gauss(rng));
    norm += rule.w.back() * rule.w.back();
  }
  for (double& w : rule.w) w /= std::sqrt(norm);

  TaskFamily family;
  for (std::size_t s = 0; s < spec.sources; ++s) {
    family.sources.push_back(
        sample_task(spec, rule, "source_" + std::to_string(s + 1), spec.source_samples, s));
  }
  family.target = sample_task(spec, rule, "target", spec.target_samples, spec.sources);
  return family;
}

std::vector<std::filesystem::path> write_task_family(const std::filesystem::path& dir,
                                                     const TaskFamily& family) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& ds : family.sources) {
    paths.push_back(dir / (ds.name + ".tsv"));
    write_expression_tsv(paths.back(), ds);
  }
  paths.push_back(dir / (family.target.name + ".tsv"));
  write_expression_tsv(paths.back(), family.target);
  return paths;
}

}  // namespace genemeta
