#include <benchmark/benchmark.h>

#include <random>

#include "sparsectl/models.hpp"
#include "sparsectl/sim.hpp"
#include "sparsectl/sparsify.hpp"
#include "sparsectl/synth.hpp"

namespace {

using namespace sparsectl;

Matrix random_matrix(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Matrix M(n, n);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = dist(gen);
  return M;
}

void BM_SpectralNormSvd(benchmark::State& state) {
  const Matrix M = random_matrix(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(linops::spectral_norm(M));
}
BENCHMARK(BM_SpectralNormSvd)->Arg(8)->Arg(64)->Arg(256);

void BM_SpectralNormPower(benchmark::State& state) {
  const Matrix M = random_matrix(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(linops::spectral_norm_power(M));
}
BENCHMARK(BM_SpectralNormPower)->Arg(8)->Arg(64)->Arg(256)->Arg(512);

void BM_MaskSample(benchmark::State& state) {
  const MaskSampler sampler(Vector::Constant(state.range(0), 0.6), 42, 0);
  Mask mask;
  std::uint64_t k = 0;
  for (auto _ : state) {
    sampler.sample_into(k++, mask);
    benchmark::DoNotOptimize(mask.scale.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MaskSample)->Arg(3)->Arg(40)->Arg(400);

void BM_Algorithm1Chain(benchmark::State& state) {
  const Plant plant = models::interconnected_chain(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(algorithm1(plant).p_star);
}
BENCHMARK(BM_Algorithm1Chain)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EnsembleConverter(benchmark::State& state) {
  const Plant plant = models::converter();
  const auto plan = algorithm1(plant);
  SimConfig cfg;
  cfg.runs = 1000;
  cfg.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(plant, plan, cfg).mean_sq_norm.data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.runs * cfg.steps));
}
BENCHMARK(BM_EnsembleConverter)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
