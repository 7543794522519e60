#include <benchmark/benchmark.h>

#include "latalign/align/alignment_layer.hpp"
#include "latalign/align/whitening.hpp"
#include "latalign/eval/composition.hpp"
#include "latalign/model/model.hpp"
#include "latalign/random.hpp"

using namespace latalign;

namespace {

Tensor noise(Tensor::Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

void BM_EegNetForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ModelSpec spec = ModelSpec::defaults(Architecture::EegNet, 64, 480, 3, 160.0);
  spec.alignment_mode = AlignmentMode::Latent;
  const auto model = build_model(spec, 1);
  const Tensor x = noise({n, 64, 480}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model->forward(x, ForwardOptions{}).scores);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_EegNetForward)->Arg(1 << 1)->Arg(1 << 4)->Unit(benchmark::kMillisecond);

void BM_EegNetTrainStep(benchmark::State& state) {
  ModelSpec spec = ModelSpec::defaults(Architecture::EegNet, 8, 64, 3, 64.0);
  spec.alignment_mode = AlignmentMode::Latent;
  const auto model = build_model(spec, 1);
  const Tensor x = noise({48, 8, 64}, 3);
  SubjectGroups groups(4);
  for (std::size_t i = 0; i < 48; ++i) groups[i / 12].push_back(i);
  ForwardOptions o;
  o.training = true;
  o.groups = &groups;
  const Tensor grad = noise({48, 3}, 4);
  for (auto _ : state) {
    model->forward(x, o);
    benchmark::DoNotOptimize(model->backward(grad));
  }
}
BENCHMARK(BM_EegNetTrainStep)->Unit(benchmark::kMillisecond);

void BM_LatentAlign(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  AlignmentLayer layer(d, AlignmentMode::Latent);
  const Tensor x = noise({64, d, 120}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x, AlignmentPass{}));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(x.size() * sizeof(double)));
}
BENCHMARK(BM_LatentAlign)->Arg(8)->Arg(64);

void BM_FitWhitener(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = noise({40, c, 480}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(euclidean_align(x, fit_whitener(x)));
}
BENCHMARK(BM_FitWhitener)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EnumerateCompositions(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> probs(3, 1.0 / 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(make_grid(n, 3, probs));
}
BENCHMARK(BM_EnumerateCompositions)->Arg(21)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
