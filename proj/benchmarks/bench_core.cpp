#include <benchmark/benchmark.h>

#include <vector>

#include "genemeta/autodiff.hpp"
#include "genemeta/models.hpp"
#include "genemeta/rng.hpp"
#include "genemeta/shapley.hpp"
#include "genemeta/synth.hpp"
#include "genemeta/trainer.hpp"

namespace gm = genemeta;

namespace {

gm::Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  gm::Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  gm::Tensor t({rows, cols});
  for (double& v : t.data()) v = n(rng);
  return t;
}

gm::Tensor random_labels(std::size_t n, std::uint64_t seed) {
  gm::Rng rng(seed);
  std::bernoulli_distribution b(0.5);
  gm::Tensor t({n});
  for (double& v : t.data()) v = b(rng) ? 1.0 : 0.0;
  return t;
}

gm::ModelConfig config_for(gm::Architecture arch, std::size_t d) {
  gm::ModelConfig c;
  c.architecture = arch;
  c.input_dim = d;
  return c;
}

}  // namespace

// Forward + backward of one linear layer, batch 32 x 695 -> 128.
static void BM_LinearForwardBackward(benchmark::State& state) {
  const gm::Tensor x = random_matrix(32, 695, 1);
  const gm::Tensor w = random_matrix(128, 695, 2);
  for (auto _ : state) {
    gm::ad::Tape tape;
    const gm::ad::Var xv = tape.constant(x);
    const gm::ad::Var wv = tape.variable(w);
    const gm::ad::Var loss = gm::ad::sum(gm::ad::linear(xv, wv));
    benchmark::DoNotOptimize(tape.backward(loss));
  }
}
BENCHMARK(BM_LinearForwardBackward);

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const gm::Tensor a = random_matrix(n, n, 3);
  const gm::Tensor b = random_matrix(n, n, 4);
  for (auto _ : state) {
    gm::ad::Tape tape;
    benchmark::DoNotOptimize(gm::ad::matmul(tape.constant(a), tape.constant(b)).value());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

// Loss and gradient of each architecture at the real-data width.
static void BM_LossAndGrad(benchmark::State& state) {
  const auto arch = static_cast<gm::Architecture>(state.range(0));
  const gm::ModelConfig cfg = config_for(arch, 695);
  const gm::ModelParams params = gm::init_model(cfg, 5);
  const gm::Tensor x = random_matrix(32, 695, 6);
  const gm::Tensor y = random_labels(32, 7);
  for (auto _ : state) benchmark::DoNotOptimize(gm::loss_and_grad(cfg, params, x, y));
  state.SetLabel(std::string(gm::to_string(arch)));
}
BENCHMARK(BM_LossAndGrad)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

// One meta-gradient on the default synthetic family (3 sources, 50 genes).
static void BM_MetaGradient(benchmark::State& state) {
  gm::SynthSpec spec;
  spec.seed = 1;
  const gm::TaskFamily fam = gm::generate_task_family(spec);
  const gm::ModelConfig cfg = config_for(gm::Architecture::mlp, spec.features);
  const gm::ModelParams params = gm::init_model(cfg, 2);
  const gm::MetaConfig meta;
  const gm::Batch batch{fam.target.matrix, fam.target.label_tensor()};
  gm::Rng rng(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(gm::meta_gradient(cfg, params, batch, fam.sources, meta, rng));
}
BENCHMARK(BM_MetaGradient)->Unit(benchmark::kMillisecond);

// Sampled Shapley values for one sample; argument is the permutation count.
static void BM_ShapleySampled(benchmark::State& state) {
  const gm::ModelConfig cfg = config_for(gm::Architecture::mlp, 50);
  const gm::ModelParams params = gm::init_model(cfg, 8);
  const gm::Tensor background = random_matrix(54, 50, 9);
  const gm::Tensor sample = random_matrix(1, 50, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gm::shapley_sampled(cfg, params, background, sample.data(),
                                                 static_cast<std::size_t>(state.range(0)), 11));
  }
}
BENCHMARK(BM_ShapleySampled)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_ShapleyExact(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const gm::ModelConfig cfg = config_for(gm::Architecture::mlp, d);
  const gm::ModelParams params = gm::init_model(cfg, 12);
  const gm::Tensor background = random_matrix(20, d, 13);
  const gm::Tensor sample = random_matrix(1, d, 14);
  for (auto _ : state) benchmark::DoNotOptimize(gm::shapley_exact(cfg, params, background, sample.data()));
}
BENCHMARK(BM_ShapleyExact)->DenseRange(4, 12, 4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
