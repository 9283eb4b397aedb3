#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "radiance/adam.hpp"
#include "radiance/dataset.hpp"
#include "radiance/field.hpp"
#include "radiance/renderer.hpp"

namespace rf {

enum class LossMode {
  MeanSquared,  // (1 / 3|R|) sum ||C^ - C||^2
  Norm,         // (1 / |R|) sum ||C^ - C||_2
};

struct LossResult {
  double value = 0;
  std::vector<Vec3> cotangent;
};

LossResult photometric_loss(std::span<const Vec3> predicted, std::span<const Vec3> truth,
                            LossMode mode);

// One ray's share of a batch of `batch_size` rays; writes d(loss)/d(predicted).
double ray_loss(const Vec3& predicted, const Vec3& truth, LossMode mode, std::size_t batch_size,
                Vec3* cotangent);

struct RayId {
  std::uint32_t frame = 0;
  std::uint32_t pixel = 0;
};

struct RayBatch {
  std::vector<Ray> rays;
  std::vector<Vec3> colors;
  std::vector<RayId> ids;

  std::size_t size() const { return rays.size(); }
};

enum class BatchMode {
  Random,      // uniform over all (training image, pixel) pairs
  Exhaustive,  // consecutive pixels of the flattened training set, wrapping around
};

RayBatch sample_ray_batch(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                          std::int64_t iteration, BatchMode mode = BatchMode::Random);

RandomStream ray_stream(std::uint64_t seed, const RayId& id, std::int64_t iteration);

struct GradientOptions {
  RenderOptions render;  // sampling.jitter normally on for training
  LossMode loss = LossMode::MeanSquared;
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;
  std::size_t chunk_rays = 64;
  // Fixed chunking and a fixed pairwise reduction order, independent of the
  // thread count. When off, per-thread partial sums are merged in thread order.
  bool deterministic = true;
};

// Renders the batch, evaluates the photometric loss and accumulates its
// gradient into `grad`. Rays are processed in chunks in parallel.
template <typename T>
double batch_loss_and_gradient(const TrainableField<T>& field, const RayBatch& batch,
                               const GradientOptions& options, std::span<T> grad);

// Ray-at-a-time reference of the above.
template <typename T>
double batch_loss_and_gradient_serial(const TrainableField<T>& field, const RayBatch& batch,
                                      const GradientOptions& options, std::span<T> grad);

struct TrainConfig {
  int iterations = 5000;
  int rays_per_batch = 1024;
  int samples_per_ray = 64;
  AdamConfig adam{};
  double lr_final = 5e-5;  // exponential decay from adam.lr to this over the run
  LossMode loss = LossMode::MeanSquared;
  int eval_interval = 0;   // 0: evaluate once at the end
  int eval_samples = 0;    // 0: same as samples_per_ray
  std::uint64_t seed = 0;
  bool deterministic = true;
  std::size_t chunk_rays = 64;
  IntervalRule interval_rule = IntervalRule::Stratum;
  std::filesystem::path checkpoint_path;  // written at every evaluation when set
  bool verbose = false;
};

void validate(const TrainConfig& cfg);

struct EvalRecord {
  int iteration = 0;
  double train_loss = 0;
  double psnr = 0;  // mean over held-out views
  std::vector<double> view_psnr;
};

struct TrainReport {
  std::vector<double> losses;  // one per iteration
  std::vector<EvalRecord> evals;
  int skipped_steps = 0;
  double seconds = 0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

double learning_rate(const TrainConfig& cfg, int iteration);

template <typename T>
TrainReport train(TrainableField<T>& field, const Dataset& dataset, const TrainConfig& config);

// Midpoint-sampled renders of the given frames and their PSNR against the
// dataset images.
std::vector<double> evaluate_views(const RadianceField& field, const Dataset& dataset,
                                   std::span<const std::size_t> frames, int samples_per_ray);

// Mean held-out PSNR of a constant image filled with the mean training color.
double mean_image_baseline(const Dataset& dataset);

// One JSON object per line: {"iteration", "loss", "psnr"} (psnr null when not evaluated).
void write_report(const std::filesystem::path& path, const TrainReport& report);

extern template double batch_loss_and_gradient<float>(const TrainableField<float>&, const RayBatch&,
                                                      const GradientOptions&, std::span<float>);
extern template double batch_loss_and_gradient<double>(const TrainableField<double>&,
                                                       const RayBatch&, const GradientOptions&,
                                                       std::span<double>);
extern template double batch_loss_and_gradient_serial<float>(const TrainableField<float>&,
                                                             const RayBatch&,
                                                             const GradientOptions&,
                                                             std::span<float>);
extern template double batch_loss_and_gradient_serial<double>(const TrainableField<double>&,
                                                              const RayBatch&,
                                                              const GradientOptions&,
                                                              std::span<double>);
extern template TrainReport train<float>(TrainableField<float>&, const Dataset&,
                                         const TrainConfig&);
extern template TrainReport train<double>(TrainableField<double>&, const Dataset&,
                                          const TrainConfig&);

}  // namespace rf
