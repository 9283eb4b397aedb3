#include "radiance/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>

#include "radiance/checkpoint.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rf {

double ray_loss(const Vec3& predicted, const Vec3& truth, LossMode mode, std::size_t batch_size,
                Vec3* cotangent) {
  const Vec3 diff = predicted - truth;
  const double n = static_cast<double>(batch_size);
  if (mode == LossMode::MeanSquared) {
    if (cotangent != nullptr) *cotangent = 2.0 * diff / (3.0 * n);
    return diff.squaredNorm() / (3.0 * n);
  }
  const double norm = diff.norm();
  if (cotangent != nullptr) *cotangent = norm > 0 ? Vec3(diff / (n * norm)) : Vec3(Vec3::Zero());
  return norm / n;
}

LossResult photometric_loss(std::span<const Vec3> predicted, std::span<const Vec3> truth,
                            LossMode mode) {
  if (predicted.size() != truth.size()) throw InputError("photometric_loss: batch sizes differ");
  LossResult r;
  r.cotangent.resize(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i)
    r.value += ray_loss(predicted[i], truth[i], mode, predicted.size(), &r.cotangent[i]);
  return r;
}

RandomStream ray_stream(std::uint64_t seed, const RayId& id, std::int64_t iteration) {
  return RandomStream({seed, 0x726179ULL, id.frame, id.pixel, static_cast<std::uint64_t>(iteration)});
}

RayBatch sample_ray_batch(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                          std::int64_t iteration, BatchMode mode) {
  const auto train = dataset.indices(Split::Train);
  if (train.empty()) throw InputError("dataset has no training frames");
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  const std::uint64_t pixels = static_cast<std::uint64_t>(dataset.intrinsics.width) *
                               static_cast<std::uint64_t>(dataset.intrinsics.height);
  const std::uint64_t total = pixels * train.size();

  std::vector<Camera> cameras;
  cameras.reserve(train.size());
  for (std::size_t f : train) cameras.push_back(dataset.camera(f));

  RayBatch batch;
  batch.rays.reserve(batch_size);
  batch.colors.reserve(batch_size);
  batch.ids.reserve(batch_size);
  RandomStream rng({seed, 0x6261746368ULL, static_cast<std::uint64_t>(iteration)});
  for (std::size_t k = 0; k < batch_size; ++k) {
    const std::uint64_t index =
        mode == BatchMode::Random
            ? rng.below(total)
            : (static_cast<std::uint64_t>(iteration) * batch_size + k) % total;
    const std::size_t slot = static_cast<std::size_t>(index / pixels);
    const auto pixel = static_cast<std::uint32_t>(index % pixels);
    const int px = static_cast<int>(pixel % static_cast<std::uint32_t>(dataset.intrinsics.width));
    const int py = static_cast<int>(pixel / static_cast<std::uint32_t>(dataset.intrinsics.width));
    const std::size_t frame = train[slot];
    batch.rays.push_back(generate_ray(cameras[slot], px, py, dataset.scene.t_near, dataset.scene.t_far));
    batch.colors.push_back(dataset.frames[frame].image.at(px, py));
    batch.ids.push_back(RayId{static_cast<std::uint32_t>(frame), pixel});
  }
  return batch;
}

namespace {

// Forward + backward over rays [begin, end) with one batched field query.
template <typename T>
double process_rays(const TrainableField<T>& field, const RayBatch& batch, std::size_t begin,
                    std::size_t end, const GradientOptions& opt, std::span<T> grad) {
  const std::size_t m = end - begin;
  const auto n = static_cast<std::size_t>(opt.render.sampling.count);
  std::vector<SampleSet> samples(m);
  std::vector<Vec3> positions(m * n);
  std::vector<Vec3> directions(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const Ray& ray = batch.rays[begin + r];
    RandomStream rng = ray_stream(opt.seed, batch.ids[begin + r], opt.iteration);
    samples[r] = stratified_samples(ray, opt.render.sampling, &rng);
    for (std::size_t i = 0; i < n; ++i) {
      positions[r * n + i] = ray.at(samples[r].t[i]);
      directions[r * n + i] = ray.direction;
    }
  }
  std::vector<FieldSample> values(m * n);
  auto tape = field.query_batch_recorded(positions, directions, values);

  std::vector<double> sigma_cot(m * n);
  std::vector<Vec3> color_cot(m * n);
  double loss = 0;
  for (std::size_t r = 0; r < m; ++r) {
    const RayQuadrature q = quadrature(samples[r], std::span(values).subspan(r * n, n), opt.render.background);
    Vec3 cot;
    loss += ray_loss(q.composite, batch.colors[begin + r], opt.loss, batch.size(), &cot);
    const QuadratureGradient qg = quadrature_backward(q, cot);
    std::copy(qg.sigma.begin(), qg.sigma.end(), sigma_cot.begin() + static_cast<std::ptrdiff_t>(r * n));
    std::copy(qg.color.begin(), qg.color.end(), color_cot.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  field.backward(*tape, sigma_cot, color_cot, grad);
  return loss;
}

template <typename T>
void add_into(std::span<T> dst, std::span<const T> src) {
  const auto n = static_cast<std::ptrdiff_t>(dst.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += src[static_cast<std::size_t>(i)];
}

}  // namespace

template <typename T>
double batch_loss_and_gradient(const TrainableField<T>& field, const RayBatch& batch,
                               const GradientOptions& opt, std::span<T> grad) {
  if (grad.size() != field.parameters().size()) throw InputError("gradient buffer size mismatch");
  if (batch.size() == 0) return 0.0;
  const std::size_t chunk = std::max<std::size_t>(opt.chunk_rays, 1);
  const std::size_t chunks = (batch.size() + chunk - 1) / chunk;
  const std::size_t params = grad.size();
  std::vector<double> chunk_loss(chunks, 0.0);
  std::exception_ptr error;

  if (opt.deterministic) {
    std::vector<std::vector<T>> partial(chunks, std::vector<T>(params, T(0)));
    const auto count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < count; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      try {
        chunk_loss[cu] = process_rays(field, batch, cu * chunk, std::min(batch.size(), (cu + 1) * chunk),
                                      opt, std::span<T>(partial[cu]));
      } catch (...) {
#pragma omp critical(rf_gradient_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    // Pairwise tree reduction in a fixed order.
    for (std::size_t stride = 1; stride < chunks; stride *= 2)
      for (std::size_t i = 0; i + stride < chunks; i += 2 * stride)
        add_into<T>(partial[i], partial[i + stride]);
    add_into<T>(grad, partial[0]);
  } else {
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::vector<std::vector<T>> partial(static_cast<std::size_t>(threads), std::vector<T>(params, T(0)));
    const auto count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < count; ++c) {
      std::size_t tid = 0;
#ifdef _OPENMP
      tid = static_cast<std::size_t>(omp_get_thread_num());
#endif
      const auto cu = static_cast<std::size_t>(c);
      try {
        chunk_loss[cu] = process_rays(field, batch, cu * chunk, std::min(batch.size(), (cu + 1) * chunk),
                                      opt, std::span<T>(partial[tid]));
      } catch (...) {
#pragma omp critical(rf_gradient_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    for (const auto& p : partial) add_into<T>(grad, p);
  }
  double loss = 0;
  for (double l : chunk_loss) loss += l;
  return loss;
}

template <typename T>
double batch_loss_and_gradient_serial(const TrainableField<T>& field, const RayBatch& batch,
                                      const GradientOptions& opt, std::span<T> grad) {
  if (grad.size() != field.parameters().size()) throw InputError("gradient buffer size mismatch");
  double loss = 0;
  for (std::size_t r = 0; r < batch.size(); ++r) loss += process_rays(field, batch, r, r + 1, opt, grad);
  return loss;
}

void validate(const TrainConfig& cfg) {
  if (cfg.iterations < 0) throw InputError("iterations must be >= 0");
  if (cfg.rays_per_batch < 1 || cfg.samples_per_ray < 1)
    throw InputError("rays per batch and samples per ray must be >= 1");
  if (!(cfg.adam.lr > 0) || !(cfg.lr_final > 0)) throw InputError("learning rates must be positive");
  if (cfg.eval_interval < 0 || cfg.eval_samples < 0) throw InputError("eval settings must be >= 0");
}

double learning_rate(const TrainConfig& cfg, int iteration) {
  if (cfg.iterations <= 1) return cfg.adam.lr;
  const double frac = static_cast<double>(iteration) / static_cast<double>(cfg.iterations);
  return cfg.adam.lr * std::pow(cfg.lr_final / cfg.adam.lr, frac);
}

std::vector<double> evaluate_views(const RadianceField& field, const Dataset& dataset,
                                   std::span<const std::size_t> frames, int samples_per_ray) {
  RenderOptions opts;
  opts.sampling.count = samples_per_ray;
  opts.sampling.jitter = false;
  opts.background = dataset.scene.background;
  std::vector<double> out;
  for (std::size_t f : frames) {
    const RenderedImage img =
        render_image(field, dataset.camera(f), dataset.scene.t_near, dataset.scene.t_far, opts);
    out.push_back(psnr(img.color, dataset.frames[f].image));
  }
  return out;
}

double mean_image_baseline(const Dataset& dataset) {
  const auto train = dataset.indices(Split::Train);
  const auto test = dataset.indices(Split::Test);
  if (train.empty() || test.empty()) throw InputError("baseline needs training and held-out frames");
  Vec3 mean = Vec3::Zero();
  for (std::size_t f : train) mean += dataset.frames[f].image.mean();
  mean /= static_cast<double>(train.size());
  const Image constant(dataset.intrinsics.width, dataset.intrinsics.height, mean);
  double sum = 0;
  for (std::size_t f : test) sum += psnr(constant, dataset.frames[f].image);
  return sum / static_cast<double>(test.size());
}

template <typename T>
TrainReport train(TrainableField<T>& field, const Dataset& dataset, const TrainConfig& cfg) {
  validate(cfg);
  TrainReport report;
  if (cfg.iterations == 0) return report;
  const auto start = std::chrono::steady_clock::now();

  std::span<T> params = field.parameters();
  AdamState<T> adam(params.size());
  std::vector<T> grad(params.size());
  const auto held_out = dataset.indices(Split::Test);

  GradientOptions go;
  go.render.sampling.count = cfg.samples_per_ray;
  go.render.sampling.jitter = true;
  go.render.sampling.rule = cfg.interval_rule;
  go.render.background = dataset.scene.background;
  go.loss = cfg.loss;
  go.seed = cfg.seed;
  go.chunk_rays = cfg.chunk_rays;
  go.deterministic = cfg.deterministic;

  for (int it = 0; it < cfg.iterations; ++it) {
    const RayBatch batch =
        sample_ray_batch(dataset, static_cast<std::size_t>(cfg.rays_per_batch), cfg.seed, it);
    std::fill(grad.begin(), grad.end(), T(0));
    go.iteration = it;
    const std::string where = "iteration " + std::to_string(it) + " (batch " + std::to_string(it) +
                              ", seed " + std::to_string(cfg.seed) + ")";
    double loss = 0;
    try {
      loss = batch_loss_and_gradient<T>(field, batch, go, grad);
    } catch (const NumericError& e) {
      throw TrainingError(std::string(e.what()) + " at " + where, it);
    }
    if (!std::isfinite(loss)) throw TrainingError("non-finite loss at " + where, it);
    report.losses.push_back(loss);
    try {
      adam_step<T>(params, grad, adam, cfg.adam, learning_rate(cfg, it));
    } catch (const NumericError&) {
      if (report.skipped_steps > 0)
        throw TrainingError("non-finite gradient twice; aborting at iteration " + std::to_string(it), it);
      ++report.skipped_steps;
      if (cfg.verbose) std::fprintf(stderr, "iteration %d: non-finite gradient, step skipped\n", it);
    }

    const bool last = it + 1 == cfg.iterations;
    if (last || (cfg.eval_interval > 0 && (it + 1) % cfg.eval_interval == 0)) {
      EvalRecord rec;
      rec.iteration = it + 1;
      rec.train_loss = loss;
      if (!held_out.empty()) {
        rec.view_psnr = evaluate_views(field, dataset, held_out,
                                       cfg.eval_samples > 0 ? cfg.eval_samples : cfg.samples_per_ray);
        double sum = 0;
        for (double p : rec.view_psnr) sum += p;
        rec.psnr = sum / static_cast<double>(rec.view_psnr.size());
      }
      if (cfg.verbose)
        std::fprintf(stderr, "iteration %d  loss %.6g  held-out psnr %.3f dB\n", rec.iteration,
                     rec.train_loss, rec.psnr);
      report.evals.push_back(std::move(rec));
      if (!cfg.checkpoint_path.empty())
        save_checkpoint(cfg.checkpoint_path, field, rendering_meta_json(dataset));
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write report " + path.string());
  std::size_t next_eval = 0;
  for (std::size_t i = 0; i < report.losses.size(); ++i) {
    nlohmann::json line{{"iteration", i + 1}, {"loss", report.losses[i]}, {"psnr", nullptr}};
    if (next_eval < report.evals.size() &&
        static_cast<std::size_t>(report.evals[next_eval].iteration) == i + 1) {
      const double p = report.evals[next_eval].psnr;
      if (std::isfinite(p)) line["psnr"] = p;
      else line["psnr"] = "inf";
      ++next_eval;
    }
    out << line.dump() << '\n';
  }
}

template double batch_loss_and_gradient<float>(const TrainableField<float>&, const RayBatch&,
                                               const GradientOptions&, std::span<float>);
template double batch_loss_and_gradient<double>(const TrainableField<double>&, const RayBatch&,
                                                const GradientOptions&, std::span<double>);
template double batch_loss_and_gradient_serial<float>(const TrainableField<float>&, const RayBatch&,
                                                      const GradientOptions&, std::span<float>);
template double batch_loss_and_gradient_serial<double>(const TrainableField<double>&,
                                                       const RayBatch&, const GradientOptions&,
                                                       std::span<double>);
template TrainReport train<float>(TrainableField<float>&, const Dataset&, const TrainConfig&);
template TrainReport train<double>(TrainableField<double>&, const Dataset&, const TrainConfig&);

}  // namespace rf
