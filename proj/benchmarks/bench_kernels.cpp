// Microbenchmarks for the kernels that dominate pipeline runtime. The sizes
// mirror the cohort scale the tools are run at (tens of patients, tens to a
// hundred genes, a handful of time points).
#include <benchmark/benchmark.h>

#include "rep/completion.hpp"
#include "rep/nls.hpp"
#include "rep/predictor.hpp"
#include "rep/rng.hpp"
#include "rep/synthetic.hpp"
#include "rep/tensor.hpp"

namespace {

rep::CpModel planted_model(int patients, int genes, int times, int rank,
                           std::uint64_t seed) {
  rep::Rng rng(rep::SeedStream(seed).derive("bench/model"));
  return rep::CpModel::random_uniform(patients, genes, times, rank, rng);
}

void bm_khatri_rao(benchmark::State& state) {
  const auto rank = static_cast<int>(state.range(0));
  const auto model = planted_model(30, 50, 7, rank, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rep::khatri_rao(model.C, model.B));
}
BENCHMARK(bm_khatri_rao)->Arg(3)->Arg(8);

void bm_reconstruct(benchmark::State& state) {
  const auto rank = static_cast<int>(state.range(0));
  const auto model = planted_model(30, 50, 7, rank, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rep::reconstruct(model));
}
BENCHMARK(bm_reconstruct)->Arg(3)->Arg(8);

void bm_nls_solve(benchmark::State& state) {
  const auto cols = static_cast<int>(state.range(0));
  rep::Rng rng(rep::SeedStream(3).derive("bench/nls"));
  rep::Matrix m(64, cols);
  rep::Vector y(64);
  for (int r = 0; r < 64; ++r) {
    y(r) = rng.normal();
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(rep::nls_solve(m, y, 1e-3));
}
BENCHMARK(bm_nls_solve)->Arg(3)->Arg(8);

void bm_complete_tensor(benchmark::State& state) {
  rep::Rng rng(rep::SeedStream(4).derive("bench/completion"));
  const auto truth = planted_model(30, 50, 7, 3, 4);
  const auto data =
      rep::MaskedTensor::fully_observed(rep::reconstruct(truth)).with_hidden(30 * 50 * 7 / 5, rng);
  rep::CompletionConfig cfg;
  cfg.rank = 3;
  cfg.lambda = 1e-3;
  cfg.max_iters = 25;
  cfg.rel_tol = 1e-12;  // fixed sweep count so iterations/op stays comparable
  for (auto _ : state) benchmark::DoNotOptimize(rep::complete_tensor(data, cfg));
}
BENCHMARK(bm_complete_tensor)->Unit(benchmark::kMillisecond);

void bm_train(benchmark::State& state) {
  rep::SyntheticSpec spec;
  spec.patients = 30;
  spec.genes = 50;
  spec.times = 7;
  spec.seed = 5;
  const auto data = rep::generate_synthetic(spec);
  rep::TrainOptions opts;
  opts.epochs = 200;
  for (auto _ : state)
    benchmark::DoNotOptimize(rep::train(data.tensor.values(), data.labels, opts));
}
BENCHMARK(bm_train)->Unit(benchmark::kMillisecond);

}  // namespace
