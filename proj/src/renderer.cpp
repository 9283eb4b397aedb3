#include "radiance/renderer.hpp"

#include <algorithm>
#include <string>

namespace rf {

namespace {

void check_sample(double sigma, double delta, std::size_t i) {
  if (std::isnan(sigma) || std::isinf(sigma))
    throw NumericError("sample " + std::to_string(i) + ": non-finite density");
  if (sigma < 0) throw InputError("sample " + std::to_string(i) + ": density must be >= 0");
  if (!(delta >= 0) || !std::isfinite(delta))
    throw InputError("sample " + std::to_string(i) + ": interval length must be finite and >= 0");
}

constexpr double kDepthEpsilon = 1e-10;

}  // namespace

void Compositor::add(double t, double delta, double sigma, const Vec3& color) {
  const double tau = sigma * delta;
  const double trans = std::exp(-optical_depth_);
  const double alpha = -std::expm1(-tau);
  const double w = trans * alpha;
  color_ += w * color;
  weight_sum_ += w;
  weighted_t_ += w * t;
  if (record_ != nullptr) {
    record_->t.push_back(t);
    record_->delta.push_back(delta);
    record_->sigma.push_back(sigma);
    record_->color.push_back(color);
    record_->alpha.push_back(alpha);
    record_->transmittance.push_back(trans);
    record_->weight.push_back(w);
  }
  optical_depth_ += tau;
}

Vec3 Compositor::finish(const Vec3& background, double* opacity, double* depth) {
  const double t_end = std::exp(-optical_depth_);
  const Vec3 out = color_ + t_end * background;
  const double d = weighted_t_ / std::max(weight_sum_, kDepthEpsilon);
  if (opacity != nullptr) *opacity = weight_sum_;
  if (depth != nullptr) *depth = d;
  if (record_ != nullptr) {
    record_->t_end = t_end;
    record_->background = background;
    record_->composite = out;
    record_->opacity = weight_sum_;
    record_->depth = d;
  }
  return out;
}

RayQuadrature quadrature(const SampleSet& samples, std::span<const FieldSample> values,
                         const Vec3& background) {
  if (samples.t.size() != values.size() || samples.delta.size() != values.size())
    throw InputError("quadrature: sample and value counts differ");
  RayQuadrature q;
  const std::size_t n = values.size();
  for (auto* v : {&q.t, &q.delta, &q.sigma, &q.alpha, &q.transmittance, &q.weight}) v->reserve(n);
  q.color.reserve(n);
  Compositor comp(&q);
  for (std::size_t i = 0; i < n; ++i) {
    check_sample(values[i].sigma, samples.delta[i], i);
    comp.add(samples.t[i], samples.delta[i], values[i].sigma, values[i].color);
  }
  comp.finish(background);
  return q;
}

std::vector<double> transmittance_profile(std::span<const double> sigma,
                                          std::span<const double> delta) {
  if (sigma.size() != delta.size()) throw InputError("transmittance_profile: length mismatch");
  std::vector<double> from_sum(sigma.size() + 1);
  double depth = 0;
  double product = 1;
  for (std::size_t i = 0; i <= sigma.size(); ++i) {
    from_sum[i] = std::exp(-depth);
    if (std::abs(from_sum[i] - product) > 1e-9)
      throw NumericError("transmittance forms disagree at sample " + std::to_string(i),
                         static_cast<int>(i));
    if (i == sigma.size()) break;
    check_sample(sigma[i], delta[i], i);
    depth += sigma[i] * delta[i];
    product *= std::exp(-sigma[i] * delta[i]);
  }
  return from_sum;
}

QuadratureGradient quadrature_backward(const RayQuadrature& q, const Vec3& g) {
  const std::size_t n = q.size();
  QuadratureGradient out;
  out.sigma.resize(n);
  out.color.resize(n);
  // suffix = sum_{i>k} w_i <c_i, g> + T_end <bg, g>
  double suffix = q.t_end * q.background.dot(g);
  for (std::size_t k = n; k-- > 0;) {
    const double cg = q.color[k].dot(g);
    const double t_next = q.transmittance[k] * (1.0 - q.alpha[k]);
    out.sigma[k] = q.delta[k] * (t_next * cg - suffix);
    out.color[k] = q.weight[k] * g;
    suffix += q.weight[k] * cg;
  }
  return out;
}

namespace {

std::vector<Vec3> sample_positions(const Ray& ray, const SampleSet& s) {
  std::vector<Vec3> x(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) x[i] = ray.at(s.t[i]);
  return x;
}

}  // namespace

RenderResult render_ray(const RadianceField& field, const Ray& ray, const RenderOptions& options,
                        RandomStream* rng) {
  const SampleSet s = stratified_samples(ray, options.sampling, rng);
  const std::vector<Vec3> x = sample_positions(ray, s);
  const std::vector<Vec3> d(s.size(), ray.direction);
  std::vector<FieldSample> values(s.size());
  Compositor comp;

  if (!options.early_termination) {
    field.query_batch(x, d, values);
    for (std::size_t i = 0; i < s.size(); ++i) {
      check_sample(values[i].sigma, s.delta[i], i);
      comp.add(s.t[i], s.delta[i], values[i].sigma, values[i].color);
    }
  } else {
    constexpr std::size_t kChunk = 16;
    for (std::size_t begin = 0; begin < s.size(); begin += kChunk) {
      if (comp.transmittance() < options.termination_threshold) break;
      const std::size_t len = std::min(kChunk, s.size() - begin);
      field.query_batch(std::span(x).subspan(begin, len), std::span(d).subspan(begin, len),
                        std::span(values).subspan(begin, len));
      for (std::size_t i = begin; i < begin + len; ++i) {
        check_sample(values[i].sigma, s.delta[i], i);
        comp.add(s.t[i], s.delta[i], values[i].sigma, values[i].color);
      }
    }
  }
  RenderResult r;
  r.color = comp.finish(options.background, &r.opacity, &r.depth);
  return r;
}

template <typename T>
RenderResult render_ray_gradient(const TrainableField<T>& field, const Ray& ray,
                                 const RenderOptions& options, RandomStream* rng,
                                 const Vec3& color_cotangent, std::span<T> grad) {
  const SampleSet s = stratified_samples(ray, options.sampling, rng);
  const std::vector<Vec3> x = sample_positions(ray, s);
  const std::vector<Vec3> d(s.size(), ray.direction);
  std::vector<FieldSample> values(s.size());
  auto tape = field.query_batch_recorded(x, d, values);
  const RayQuadrature q = quadrature(s, values, options.background);
  const QuadratureGradient qg = quadrature_backward(q, color_cotangent);
  field.backward(*tape, qg.sigma, qg.color, grad);
  return RenderResult{q.composite, q.opacity, q.depth};
}

template RenderResult render_ray_gradient<float>(const TrainableField<float>&, const Ray&,
                                                 const RenderOptions&, RandomStream*, const Vec3&,
                                                 std::span<float>);
template RenderResult render_ray_gradient<double>(const TrainableField<double>&, const Ray&,
                                                  const RenderOptions&, RandomStream*, const Vec3&,
                                                  std::span<double>);

namespace {

RenderedImage allocate(const Camera& camera) {
  RenderedImage out;
  out.color = Image(camera.width(), camera.height());
  out.opacity.assign(out.color.pixel_count(), 0.0);
  out.depth.assign(out.color.pixel_count(), 0.0);
  return out;
}

void render_row(const RadianceField& field, const Camera& camera, double t_near, double t_far,
                const RenderOptions& options, int y, RenderedImage& out) {
  RenderOptions eval = options;
  eval.sampling.jitter = false;
  for (int x = 0; x < camera.width(); ++x) {
    const Ray ray = generate_ray(camera, x, y, t_near, t_far);
    const RenderResult r = render_ray(field, ray, eval);
    out.color.set(x, y, r.color);
    const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(camera.width()) +
                          static_cast<std::size_t>(x);
    out.opacity[i] = r.opacity;
    out.depth[i] = r.depth;
  }
}

}  // namespace

RenderedImage render_image_serial(const RadianceField& field, const Camera& camera, double t_near,
                                  double t_far, const RenderOptions& options) {
  RenderedImage out = allocate(camera);
  for (int y = 0; y < camera.height(); ++y) render_row(field, camera, t_near, t_far, options, y, out);
  return out;
}

RenderedImage render_image(const RadianceField& field, const Camera& camera, double t_near,
                           double t_far, const RenderOptions& options) {
  RenderedImage out = allocate(camera);
  const int height = camera.height();
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (int y = 0; y < height; ++y) {
    try {
      render_row(field, camera, t_near, t_far, options, y, out);
    } catch (...) {
#pragma omp critical(rf_render_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace rf
