#include <gtest/gtest.h>

#include <cmath>

#include "radiance/geometry.hpp"

using namespace rf;

namespace {

Intrinsics centered(int w, int h, double f) { return Intrinsics{w, h, f, f, 0.5 * w, 0.5 * h}; }

Mat4 random_pose(RandomStream& rng) {
  const Vec3 eye(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  const Vec3 target(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return look_at(eye, target);
}

}  // namespace

TEST(Ray, CenterPixelIdentityPoseLooksDownMinusZ) {
  // 2x2 image: the pixel center (1,1) is hit by continuous coordinate (cx, cy).
  const Camera cam(centered(2, 2, 10), Mat4::Identity());
  const Ray r = generate_ray_at(cam, 1.0, 1.0, 0.5, 2.0);
  EXPECT_NEAR((r.direction - Vec3(0, 0, -1)).norm(), 0.0, 1e-15);
  EXPECT_EQ(r.origin, Vec3::Zero());
  // Odd size: the center pixel's +0.5 offset lands exactly on (cx, cy).
  const Camera odd(centered(3, 3, 10), Mat4::Identity());
  EXPECT_NEAR((generate_ray(odd, 1, 1, 0, 1).direction - Vec3(0, 0, -1)).norm(), 0.0, 1e-15);
}

TEST(Ray, PinholeFormulaForKnownPixel) {
  const Camera cam(Intrinsics{200, 200, 100, 100, 100, 100}, Mat4::Identity());
  const Ray r = generate_ray(cam, 149, 99, 0, 1);
  const Vec3 expected = Vec3(0.495, 0.005, -1.0).normalized();
  EXPECT_NEAR((r.direction - expected).norm(), 0.0, 1e-15);
  EXPECT_NEAR(r.direction.x(), 0.495 / std::sqrt(0.495 * 0.495 + 0.005 * 0.005 + 1), 1e-15);
}

TEST(Ray, DirectionsAreUnitAndRotatedToWorld) {
  RandomStream rng(11);
  for (int i = 0; i < 200; ++i) {
    const Camera cam(centered(31, 17, rng.uniform(5, 80)), random_pose(rng));
    const int px = static_cast<int>(rng.below(31));
    const int py = static_cast<int>(rng.below(17));
    const Ray r = generate_ray(cam, px, py, 0.1, 3.0);
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
    EXPECT_EQ(r.origin, cam.position());
  }
}

TEST(Ray, ProjectionRecoversPixelCenter) {
  RandomStream rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Intrinsics in{40 + static_cast<int>(rng.below(60)), 30 + static_cast<int>(rng.below(60)),
                        rng.uniform(20, 120), rng.uniform(20, 120), rng.uniform(10, 30),
                        rng.uniform(10, 30)};
    const Camera cam(in, random_pose(rng));
    const int px = static_cast<int>(rng.below(static_cast<std::uint64_t>(in.width)));
    const int py = static_cast<int>(rng.below(static_cast<std::uint64_t>(in.height)));
    const Ray r = generate_ray(cam, px, py, 0.1, 10);
    const Eigen::Vector2d uv = cam.project(r.at(rng.uniform(0.5, 8)));
    EXPECT_NEAR(uv.x(), px + 0.5, 1e-6);
    EXPECT_NEAR(uv.y(), py + 0.5, 1e-6);
  }
}

TEST(Ray, ImageYGrowsDownward) {
  const Camera cam(centered(10, 10, 10), Mat4::Identity());
  EXPECT_GT(generate_ray(cam, 5, 0, 0, 1).direction.y(), 0.0);
  EXPECT_LT(generate_ray(cam, 5, 9, 0, 1).direction.y(), 0.0);
  EXPECT_GT(generate_ray(cam, 9, 5, 0, 1).direction.x(), 0.0);
}

TEST(Ray, RejectsOutOfRangePixelsAndBadBounds) {
  const Camera cam(centered(4, 3, 5), Mat4::Identity());
  EXPECT_THROW(generate_ray(cam, 4, 0, 0, 1), InputError);
  EXPECT_THROW(generate_ray(cam, 0, 3, 0, 1), InputError);
  EXPECT_THROW(generate_ray(cam, -1, 0, 0, 1), InputError);
  EXPECT_THROW(generate_ray(cam, 0, 0, 1, 1), InputError);
  EXPECT_THROW(generate_ray(cam, 0, 0, -0.5, 1), InputError);
}

TEST(CameraPose, RejectsNonOrthonormalRotation) {
  Mat4 pose = Mat4::Identity();
  pose(0, 0) = 1.01;
  EXPECT_THROW(Camera(centered(4, 4, 5), pose), InputError);
  Mat4 shear = Mat4::Identity();
  shear(0, 1) = 1e-3;
  EXPECT_THROW(validate_pose(shear), InputError);
  Mat4 bottom = Mat4::Identity();
  bottom(3, 0) = 0.5;
  EXPECT_THROW(validate_pose(bottom), InputError);
  EXPECT_NO_THROW(validate_pose(Mat4::Identity()));
}

TEST(CameraPose, RejectsBadIntrinsics) {
  EXPECT_THROW(Camera(Intrinsics{0, 4, 5, 5, 2, 2}, Mat4::Identity()), InputError);
  EXPECT_THROW(Camera(Intrinsics{4, 4, 0, 5, 2, 2}, Mat4::Identity()), InputError);
  EXPECT_THROW(Camera(Intrinsics{4, 4, 5, -1, 2, 2}, Mat4::Identity()), InputError);
}

TEST(CameraPose, LookAtAimsForwardAxisAtTarget) {
  RandomStream rng(8);
  for (int i = 0; i < 100; ++i) {
    const Vec3 eye(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    const Vec3 target(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Mat4 pose = look_at(eye, target);
    EXPECT_NO_THROW(validate_pose(pose));
    const Camera cam(centered(8, 8, 8), pose);
    const Vec3 to_target = (target - eye).normalized();
    EXPECT_NEAR((cam.forward() - to_target).norm(), 0.0, 1e-12);
  }
  // Viewing straight down the up vector uses the fallback axis.
  EXPECT_NO_THROW(validate_pose(look_at(Vec3(0, 0, 4), Vec3::Zero())));
}

TEST(Samples, SingleSampleIsMidpoint) {
  const Ray r{Vec3::Zero(), Vec3::UnitX(), 1.0, 3.0};
  SamplingOptions o;
  o.count = 1;
  const SampleSet s = stratified_samples(r, o);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.t[0], 2.0);
  EXPECT_DOUBLE_EQ(s.delta[0], 2.0);
}

TEST(Samples, FourEqualBinsMidpoints) {
  const Ray r{Vec3::Zero(), Vec3::UnitX(), 0.0, 4.0};
  SamplingOptions o;
  o.count = 4;
  const SampleSet s = stratified_samples(r, o);
  EXPECT_EQ(s.t, (std::vector<double>{0.5, 1.5, 2.5, 3.5}));
  EXPECT_EQ(s.delta, (std::vector<double>{1, 1, 1, 1}));
}

TEST(Samples, SpacingRuleUsesGapsAndFlooredTail) {
  const Ray r{Vec3::Zero(), Vec3::UnitX(), 0.0, 4.0};
  SamplingOptions o;
  o.count = 4;
  o.rule = IntervalRule::Spacing;
  const SampleSet s = stratified_samples(r, o);
  EXPECT_EQ(s.delta, (std::vector<double>{1, 1, 1, 0.5}));
  o.count = 1;
  o.last_interval_floor = 1e-3;
  const Ray tight{Vec3::Zero(), Vec3::UnitX(), 0.0, 1e-4};
  EXPECT_DOUBLE_EQ(stratified_samples(tight, o).delta[0], 1e-3);
}

TEST(Samples, ZeroCountRejected) {
  const Ray r{Vec3::Zero(), Vec3::UnitX(), 0.0, 1.0};
  SamplingOptions o;
  o.count = 0;
  EXPECT_THROW(stratified_samples(r, o), InputError);
}

TEST(Samples, JitteredSamplesStayInTheirBins) {
  const Ray r{Vec3::Zero(), Vec3::UnitZ(), 0.7, 5.3};
  SamplingOptions o;
  o.count = 13;
  o.jitter = true;
  const double width = (r.t_far - r.t_near) / o.count;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    RandomStream rng({seed});
    const SampleSet s = stratified_samples(r, o, &rng);
    for (int i = 0; i < o.count; ++i) {
      ASSERT_GE(s.t[static_cast<std::size_t>(i)], r.t_near + i * width - 1e-12);
      ASSERT_LE(s.t[static_cast<std::size_t>(i)], r.t_near + (i + 1) * width + 1e-12);
      if (i > 0) ASSERT_GT(s.t[static_cast<std::size_t>(i)], s.t[static_cast<std::size_t>(i - 1)]);
    }
  }
}

TEST(Samples, DeterministicGivenSeed) {
  const Ray r{Vec3::Zero(), Vec3::UnitZ(), 0.0, 2.0};
  SamplingOptions o;
  o.count = 32;
  o.jitter = true;
  RandomStream a({1, 2, 3});
  RandomStream b({1, 2, 3});
  RandomStream c({1, 2, 4});
  const SampleSet sa = stratified_samples(r, o, &a);
  EXPECT_EQ(sa.t, stratified_samples(r, o, &b).t);
  EXPECT_NE(sa.t, stratified_samples(r, o, &c).t);
}

TEST(Samples, StrataPartitionTheRay) {
  const Ray r{Vec3::Zero(), Vec3::UnitZ(), 2.0, 7.5};
  for (int n : {1, 2, 3, 17, 64, 255}) {
    SamplingOptions o;
    o.count = n;
    const SampleSet s = stratified_samples(r, o);
    double sum = 0;
    for (double d : s.delta) sum += d;
    EXPECT_NEAR(sum, 5.5, 1e-12);
    EXPECT_LT(s.t.front(), r.t_near + 5.5 / n);
    EXPECT_GT(s.t.back(), r.t_far - 5.5 / n);
  }
}
