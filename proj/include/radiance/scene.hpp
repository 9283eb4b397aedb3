#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "radiance/dataset.hpp"
#include "radiance/field.hpp"
#include "radiance/geometry.hpp"

namespace rf {

struct HomogeneousSphere {
  Vec3 center = Vec3::Zero();
  double radius = 1;
  double sigma = 1;
  Vec3 color = Vec3::Constant(0.5);
};

struct HomogeneousBox {
  Vec3 min = Vec3::Constant(-0.5);
  Vec3 max = Vec3::Constant(0.5);
  double sigma = 1;
  Vec3 color = Vec3::Constant(0.5);
};

// sigma(x) = peak * exp(-|x - center|^2 / (2 scale^2)) inside `cutoff`, zero outside.
struct GaussianBlob {
  Vec3 center = Vec3::Zero();
  double scale = 0.25;
  double peak = 1;
  Vec3 color = Vec3::Constant(0.5);
  double cutoff = 0.75;
};

// Homogeneous sphere with color clamp(color + tint * <d, n>, 0, 1), where n is
// the unit vector from the center toward the query point.
struct ViewTintedSphere {
  Vec3 center = Vec3::Zero();
  double radius = 1;
  double sigma = 1;
  Vec3 color = Vec3::Constant(0.5);
  Vec3 tint = Vec3::Zero();
};

using Primitive = std::variant<HomogeneousSphere, HomogeneousBox, GaussianBlob, ViewTintedSphere>;

// Emission-absorption scene with closed-form (or adaptively integrated)
// ray colors. Primitives must not overlap, so every ray crosses them in
// disjoint intervals.
class AnalyticScene {
 public:
  AnalyticScene(std::vector<Primitive> primitives, const Vec3& background);

  const std::vector<Primitive>& primitives() const { return primitives_; }
  const Vec3& background() const { return background_; }

 private:
  std::vector<Primitive> primitives_;
  Vec3 background_;
};

// Exact color of a ray, composited front to back over primitive intervals
// clipped to [t_near, t_far], plus background times the residual transmittance.
Vec3 analytic_render_ray(const AnalyticScene& scene, const Ray& ray);

// Optical depth of a primitive between ray parameters a < b.
double optical_depth(const Primitive& p, const Ray& ray, double a, double b);

// Point-wise densities and colors of the primitives; vacuum elsewhere.
class SceneField final : public RadianceField {
 public:
  explicit SceneField(const AnalyticScene& scene) : scene_(scene) {}
  void query_batch(std::span<const Vec3> positions, std::span<const Vec3> directions,
                   std::span<FieldSample> out) const override;

 private:
  FieldSample evaluate(const Vec3& x, const Vec3& d) const;
  AnalyticScene scene_;
};

inline SceneField scene_as_field(const AnalyticScene& scene) { return SceneField(scene); }

struct SynthOptions {
  int views = 38;
  int holdout_every = 5;  // view i is held out when i % holdout_every == 0
  int width = 64;
  int height = 64;
  double focal_scale = 1.6;     // fx = fy = focal_scale * width
  double distance_scale = 4.0;  // camera radius in units of the scene radius
  std::uint64_t seed = 0;
  SceneBounds bounds;
};

// Cameras at area-uniform directions on the upper (z >= 0) hemisphere around
// the bounds center, all looking at it, with analytically rendered images.
Dataset synth_dataset(const AnalyticScene& scene, const SynthOptions& options);

Image analytic_render_image(const AnalyticScene& scene, const Camera& camera, double t_near,
                            double t_far);

// {"background": [r,g,b], "primitives": [{"type": "sphere"|"box"|"blob"|"tinted_sphere", ...}]}
// with the member names of the primitive structs above.
AnalyticScene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnalyticScene& scene);

// Two spheres side by side on a white background: a homogeneous one and a
// view-tinted one (tint zeroed when `tinted` is false). Fits the default bounds.
AnalyticScene two_sphere_scene(bool tinted = true);

// Unit vector on the upper hemisphere from two uniforms, area-uniform in z.
Vec3 hemisphere_direction(double u1, double u2);

}  // namespace rf
