// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "radiance/mlp_field.hpp"
#include "radiance/renderer.hpp"
#include "radiance/scene.hpp"
#include "radiance/trainer.hpp"
#include "radiance/voxel_field.hpp"

using namespace rf;

namespace {

const Dataset& dataset() {
  static const Dataset ds = [] {
    SynthOptions o;
    o.views = 10;
    o.width = 32;
    o.height = 32;
    return synth_dataset(two_sphere_scene(), o);
  }();
  return ds;
}

MlpField<float>& mlp() {
  static MlpField<float> f(MlpFieldConfig{}, 1);
  return f;
}

VoxelField<float>& voxel() {
  static VoxelField<float> f([] {
    VoxelFieldConfig c;
    c.resolution = {40, 40, 40};
    return c;
  }());
  return f;
}

RenderOptions render_opts() {
  RenderOptions o;
  o.sampling.count = 64;
  return o;
}

void threads_from(benchmark::State& state) { omp_set_num_threads(static_cast<int>(state.range(0))); }

template <bool Parallel>
void BM_RenderImageMlp(benchmark::State& state) {
  threads_from(state);
  const Dataset& ds = dataset();
  const Camera cam = ds.camera(0);
  for (auto _ : state) {
    auto img = Parallel ? render_image(mlp(), cam, ds.scene.t_near, ds.scene.t_far, render_opts())
                        : render_image_serial(mlp(), cam, ds.scene.t_near, ds.scene.t_far, render_opts());
    benchmark::DoNotOptimize(img.color.rgb.data());
  }
  state.SetItemsProcessed(state.iterations() * 32 * 32);
}

template <bool Parallel>
void BM_RenderImageVoxel(benchmark::State& state) {
  threads_from(state);
  const Dataset& ds = dataset();
  const Camera cam = ds.camera(0);
  for (auto _ : state) {
    auto img = Parallel ? render_image(voxel(), cam, ds.scene.t_near, ds.scene.t_far, render_opts())
                        : render_image_serial(voxel(), cam, ds.scene.t_near, ds.scene.t_far, render_opts());
    benchmark::DoNotOptimize(img.color.rgb.data());
  }
  state.SetItemsProcessed(state.iterations() * 32 * 32);
}

template <bool Parallel>
void BM_BatchGradientMlp(benchmark::State& state) {
  threads_from(state);
  const RayBatch batch = sample_ray_batch(dataset(), 512, 1, 0);
  GradientOptions go;
  go.render.sampling.count = 64;
  go.render.sampling.jitter = true;
  std::vector<float> grad(mlp().parameters().size());
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0f);
    const double loss = Parallel ? batch_loss_and_gradient<float>(mlp(), batch, go, grad)
                                 : batch_loss_and_gradient_serial<float>(mlp(), batch, go, grad);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * 512);
}

template <bool Parallel>
void BM_BatchGradientVoxel(benchmark::State& state) {
  threads_from(state);
  const RayBatch batch = sample_ray_batch(dataset(), 1024, 1, 0);
  GradientOptions go;
  go.render.sampling.count = 64;
  go.render.sampling.jitter = true;
  std::vector<float> grad(voxel().parameters().size());
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0f);
    const double loss = Parallel ? batch_loss_and_gradient<float>(voxel(), batch, go, grad)
                                 : batch_loss_and_gradient_serial<float>(voxel(), batch, go, grad);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}

void thread_counts(benchmark::internal::Benchmark* b) {
  const int hw = omp_get_num_procs();
  for (int t = 1; t <= hw; t *= 2) b->Arg(t);
  if ((hw & (hw - 1)) != 0) b->Arg(hw);
  b->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_RenderImageMlp<false>)->Name("render_image/mlp/serial")->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderImageMlp<true>)->Name("render_image/mlp/parallel")->Apply(thread_counts);
BENCHMARK(BM_RenderImageVoxel<false>)->Name("render_image/voxel/serial")->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderImageVoxel<true>)->Name("render_image/voxel/parallel")->Apply(thread_counts);
BENCHMARK(BM_BatchGradientMlp<false>)->Name("batch_gradient/mlp/serial")->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientMlp<true>)->Name("batch_gradient/mlp/parallel")->Apply(thread_counts);
BENCHMARK(BM_BatchGradientVoxel<false>)->Name("batch_gradient/voxel/serial")->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientVoxel<true>)->Name("batch_gradient/voxel/parallel")->Apply(thread_counts);

BENCHMARK_MAIN();
