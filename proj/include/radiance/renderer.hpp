#pragma once

#include <span>
#include <vector>

#include "radiance/field.hpp"
#include "radiance/geometry.hpp"
#include "radiance/image.hpp"

namespace rf {

// Piecewise-constant evaluation of the emission-absorption integral along one
// ray: alpha_i = 1 - exp(-sigma_i delta_i), T_i = exp(-sum_{j<i} sigma_j delta_j),
// w_i = T_i alpha_i, color = sum w_i c_i + T_end * background.
struct RayQuadrature {
  std::vector<double> t;
  std::vector<double> delta;
  std::vector<double> sigma;
  std::vector<Vec3> color;
  std::vector<double> alpha;
  std::vector<double> transmittance;
  std::vector<double> weight;
  double t_end = 1;  // residual transmittance after the last sample
  Vec3 background = Vec3::Zero();
  Vec3 composite = Vec3::Zero();
  double opacity = 0;
  double depth = 0;

  std::size_t size() const { return t.size(); }
};

// Front-to-back accumulator used by every compositing path.
class Compositor {
 public:
  explicit Compositor(RayQuadrature* record = nullptr) : record_(record) {}

  void add(double t, double delta, double sigma, const Vec3& color);
  double transmittance() const { return std::exp(-optical_depth_); }
  // Finishes the ray: fills composite/opacity/depth (and the record, if any).
  Vec3 finish(const Vec3& background, double* opacity = nullptr, double* depth = nullptr);

 private:
  RayQuadrature* record_;
  double optical_depth_ = 0;
  double weight_sum_ = 0;
  double weighted_t_ = 0;
  Vec3 color_ = Vec3::Zero();
};

RayQuadrature quadrature(const SampleSet& samples, std::span<const FieldSample> values,
                         const Vec3& background);

// T_1..T_N followed by T_end (N + 1 values). Computes both the exp-of-sum and
// the running-product forms and throws NumericError if they disagree by > 1e-9.
std::vector<double> transmittance_profile(std::span<const double> sigma,
                                          std::span<const double> delta);

struct QuadratureGradient {
  std::vector<double> sigma;
  std::vector<Vec3> color;
};

// Pullback of <cotangent, composite> to per-sample densities and colors.
QuadratureGradient quadrature_backward(const RayQuadrature& q, const Vec3& color_cotangent);

struct RenderOptions {
  SamplingOptions sampling;
  Vec3 background = Vec3::Ones();
  // Stop marching once T < termination_threshold. Evaluation only: it changes
  // the result by at most the threshold and is never used when differentiating.
  bool early_termination = false;
  double termination_threshold = 1e-4;
};

struct RenderResult {
  Vec3 color = Vec3::Zero();
  double opacity = 0;
  double depth = 0;
};

RenderResult render_ray(const RadianceField& field, const Ray& ray, const RenderOptions& options,
                        RandomStream* rng = nullptr);

// Renders one ray and accumulates d<color_cotangent, color>/d(params) into grad.
template <typename T>
RenderResult render_ray_gradient(const TrainableField<T>& field, const Ray& ray,
                                 const RenderOptions& options, RandomStream* rng,
                                 const Vec3& color_cotangent, std::span<T> grad);

struct RenderedImage {
  Image color;
  std::vector<double> opacity;  // row-major, one per pixel
  std::vector<double> depth;
};

// Deterministic (midpoint) rendering. The parallel kernel distributes pixel
// rows over OpenMP threads; each pixel is computed exactly as in the serial
// reference, so both produce bit-identical images for any thread count.
RenderedImage render_image(const RadianceField& field, const Camera& camera, double t_near,
                           double t_far, const RenderOptions& options);
RenderedImage render_image_serial(const RadianceField& field, const Camera& camera, double t_near,
                                  double t_far, const RenderOptions& options);

extern template RenderResult render_ray_gradient<float>(const TrainableField<float>&, const Ray&,
                                                        const RenderOptions&, RandomStream*,
                                                        const Vec3&, std::span<float>);
extern template RenderResult render_ray_gradient<double>(const TrainableField<double>&,
                                                         const Ray&, const RenderOptions&,
                                                         RandomStream*, const Vec3&,
                                                         std::span<double>);

}  // namespace rf
