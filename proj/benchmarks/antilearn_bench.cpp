#include <benchmark/benchmark.h>

#include "antilearn/core_data.hpp"
#include "antilearn/generators.hpp"
#include "antilearn/ingestion.hpp"
#include "antilearn/perturb_core.hpp"
#include "antilearn/predictor.hpp"

using namespace antilearn;

namespace {

ImageDataset blobs_train() {
  SyntheticSpec spec;
  spec.n_train = 64;
  spec.n_test = 16;
  spec.seed = 11;
  return make_blobs16(spec).first;
}

void BM_ChecksumDataset(benchmark::State& state) {
  ImageDataset ds = blobs_train();
  for (auto _ : state) benchmark::DoNotOptimize(checksum_dataset(ds));
}
BENCHMARK(BM_ChecksumDataset);

void BM_ProjectLinf(benchmark::State& state) {
  Tensor4 delta(64, 16, 16, 1);
  for (size_t i = 0; i < delta.v.size(); ++i) delta.v[i] = (i % 7 - 3) * 0.01f;
  for (auto _ : state) {
    project_linf(delta.v.data(), delta.v.size(), 8.0 / 255.0);
    benchmark::DoNotOptimize(delta.v.data());
  }
}
BENCHMARK(BM_ProjectLinf);

void BM_CnnForward(benchmark::State& state) {
  ImageDataset ds = blobs_train();
  auto p = build_predictor("small_cnn", 16, 16, 1, 3, 5);
  for (auto _ : state) benchmark::DoNotOptimize(p->forward(ds.images));
}
BENCHMARK(BM_CnnForward);

void BM_CnnParamStep(benchmark::State& state) {
  ImageDataset ds = blobs_train();
  auto p = build_predictor("small_cnn", 16, 16, 1, 3, 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(p->param_step(ds.images, labels_of(ds), 0.01f));
}
BENCHMARK(BM_CnnParamStep);

void BM_PgdRun(benchmark::State& state) {
  ImageDataset ds = blobs_train();
  auto p = build_predictor("small_cnn", 16, 16, 1, 3, 5);
  PgdConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  cfg.budget = PerturbBudget{NormOrder::linf, 8, 255, Scope::sample_wise};
  for (auto _ : state)
    benchmark::DoNotOptimize(pgd_run(*p, ds.images, labels_of(ds), cfg));
}
BENCHMARK(BM_PgdRun)->Arg(1)->Arg(10);

void BM_UnetParamStep(benchmark::State& state) {
  SyntheticSpec spec;
  spec.name = SyntheticSpec::Name::shapes_seg;
  spec.n_train = 16;
  spec.n_test = 2;
  spec.seed = 11;
  ImageDataset ds = make_shapes_seg(spec).first;
  auto p = build_predictor("small_unet", 32, 32, 1, 2, 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(p->param_step(ds.images, labels_of(ds), 0.01f));
}
BENCHMARK(BM_UnetParamStep);

}  // namespace

BENCHMARK_MAIN();
