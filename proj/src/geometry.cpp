#include "radiance/geometry.hpp"

#include <Eigen/Geometry>

#include <string>

namespace rf {

void validate_pose(const Mat4& pose) {
  if (!pose.allFinite()) throw InputError("pose contains non-finite entries");
  const Mat3 r = pose.block<3, 3>(0, 0);
  const double err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (err > 1e-6)
    throw InputError("pose rotation is not orthonormal (|R^T R - I| = " + std::to_string(err) +
                     ")");
  if (pose(3, 0) != 0.0 || pose(3, 1) != 0.0 || pose(3, 2) != 0.0 || pose(3, 3) != 1.0)
    throw InputError("pose bottom row must be [0, 0, 0, 1]");
}

Camera::Camera(const Intrinsics& intrinsics, const Mat4& pose)
    : intrinsics_(intrinsics), pose_(pose) {
  if (intrinsics.width < 1 || intrinsics.height < 1)
    throw InputError("camera resolution must be at least 1x1");
  if (!(intrinsics.fx > 0) || !(intrinsics.fy > 0))
    throw InputError("camera focal lengths must be positive");
  validate_pose(pose);
}

Eigen::Vector2d Camera::project(const Vec3& world) const {
  const Vec3 local = rotation().transpose() * (world - position());
  // local.z() < 0 in front of the camera.
  const double depth = -local.z();
  return {intrinsics_.cx + intrinsics_.fx * local.x() / depth,
          intrinsics_.cy - intrinsics_.fy * local.y() / depth};
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) {
    // Looking straight along `up`; any perpendicular axis will do.
    const Vec3 alt = std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    right = forward.cross(alt);
  }
  right.normalize();
  const Vec3 back = -forward;
  const Vec3 cam_up = back.cross(right);

  Mat4 pose = Mat4::Identity();
  pose.block<3, 1>(0, 0) = right;
  pose.block<3, 1>(0, 1) = cam_up;
  pose.block<3, 1>(0, 2) = back;
  pose.block<3, 1>(0, 3) = eye;
  return pose;
}

Ray generate_ray_at(const Camera& camera, double image_x, double image_y, double t_near,
                    double t_far) {
  if (!(t_near >= 0) || !(t_near < t_far)) throw InputError("ray bounds need 0 <= t_near < t_far");
  const Intrinsics& k = camera.intrinsics();
  const Vec3 local((image_x - k.cx) / k.fx, -(image_y - k.cy) / k.fy, -1.0);
  Ray ray;
  ray.origin = camera.position();
  ray.direction = (camera.rotation() * local).normalized();
  ray.t_near = t_near;
  ray.t_far = t_far;
  return ray;
}

Ray generate_ray(const Camera& camera, int px, int py, double t_near, double t_far) {
  if (px < 0 || px >= camera.width() || py < 0 || py >= camera.height())
    throw InputError("pixel (" + std::to_string(px) + ", " + std::to_string(py) +
                     ") outside the image");
  return generate_ray_at(camera, px + 0.5, py + 0.5, t_near, t_far);
}

SampleSet stratified_samples(const Ray& ray, const SamplingOptions& options, RandomStream* rng) {
  if (options.count < 1) throw InputError("stratified_samples needs at least one sample");
  if (options.jitter && rng == nullptr) throw InputError("jittered sampling needs a random stream");

  const auto n = static_cast<std::size_t>(options.count);
  const double span = ray.t_far - ray.t_near;
  const double width = span / static_cast<double>(n);

  SampleSet s;
  s.t.resize(n);
  s.delta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = ray.t_near + span * static_cast<double>(i) / static_cast<double>(n);
    const double hi = ray.t_near + span * static_cast<double>(i + 1) / static_cast<double>(n);
    double t = options.jitter ? lo + (hi - lo) * rng->uniform() : 0.5 * (lo + hi);
    // Guard against rounding pushing a draw onto the next stratum's edge.
    if (t >= hi) t = std::nextafter(hi, lo);
    s.t[i] = t;
    s.delta[i] = width;
  }
  if (options.rule == IntervalRule::Spacing) {
    for (std::size_t i = 0; i + 1 < n; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
    s.delta[n - 1] = std::max(ray.t_far - s.t[n - 1], options.last_interval_floor);
  }
  return s;
}

}  // namespace rf
