#pragma once

#include <span>
#include <vector>

#include "radiance/common.hpp"
#include "radiance/rng.hpp"

namespace rf {

struct Intrinsics {
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
};

// Pinhole camera. `pose` is camera-to-world; the camera looks down its local
// -z axis with +y up in camera space and image rows growing downward.
class Camera {
 public:
  Camera(const Intrinsics& intrinsics, const Mat4& pose);

  const Intrinsics& intrinsics() const { return intrinsics_; }
  const Mat4& pose() const { return pose_; }
  int width() const { return intrinsics_.width; }
  int height() const { return intrinsics_.height; }
  Vec3 position() const { return pose_.block<3, 1>(0, 3); }
  Mat3 rotation() const { return pose_.block<3, 3>(0, 0); }
  // World-space viewing axis (the camera's -z).
  Vec3 forward() const { return -rotation().col(2); }

  // Continuous pixel coordinates of a world point in front of the camera.
  Eigen::Vector2d project(const Vec3& world) const;

 private:
  Intrinsics intrinsics_;
  Mat4 pose_;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double t_near = 0;
  double t_far = 1;

  Vec3 at(double t) const { return origin + t * direction; }
};

// Throws InputError unless the rotation block is orthonormal (within 1e-6)
// and the bottom row is [0, 0, 0, 1].
void validate_pose(const Mat4& pose);

// Camera-to-world pose at `eye` looking at `target`. `up` only has to be
// non-parallel to the viewing direction; a fallback axis is used otherwise.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

Ray generate_ray(const Camera& camera, int px, int py, double t_near, double t_far);

// Ray through an arbitrary continuous image location (no +0.5 offset applied).
Ray generate_ray_at(const Camera& camera, double image_x, double image_y, double t_near,
                    double t_far);

// How the interval length represented by each sample is chosen.
enum class IntervalRule {
  // delta_i is the width of the stratum containing t_i. The strata partition
  // [t_near, t_far], so sum(delta) == t_far - t_near for every sample count.
  Stratum,
  // delta_i = t_{i+1} - t_i, last interval max(t_far - t_N, floor).
  Spacing,
};

struct SampleSet {
  std::vector<double> t;
  std::vector<double> delta;

  std::size_t size() const { return t.size(); }
};

struct SamplingOptions {
  int count = 64;
  bool jitter = false;
  IntervalRule rule = IntervalRule::Stratum;
  double last_interval_floor = 1e-3;
};

// Splits [t_near, t_far] into `count` equal strata and places one sample per
// stratum: the midpoint, or a uniform draw when jittering.
SampleSet stratified_samples(const Ray& ray, const SamplingOptions& options,
                             RandomStream* rng = nullptr);

}  // namespace rf
