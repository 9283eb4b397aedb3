#include "radiance/scene.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <numbers>
#include <optional>
#include <string>

namespace rf {

namespace {

struct Interval {
  double t0;
  double t1;
};

std::optional<Interval> intersect_sphere(const Ray& ray, const Vec3& center, double radius) {
  const Vec3 oc = ray.origin - center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc <= 0) return std::nullopt;
  const double s = std::sqrt(disc);
  return Interval{-b - s, -b + s};
}

std::optional<Interval> intersect_box(const Ray& ray, const Vec3& lo, const Vec3& hi) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double o = ray.origin[k];
    const double d = ray.direction[k];
    if (d == 0.0) {
      if (o < lo[k] || o > hi[k]) return std::nullopt;
      continue;
    }
    double a = (lo[k] - o) / d;
    double b = (hi[k] - o) / d;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 >= t1) return std::nullopt;
  return Interval{t0, t1};
}

// Support of a primitive along a ray (unclipped).
std::optional<Interval> support(const Primitive& p, const Ray& ray) {
  return std::visit(
      [&](const auto& prim) -> std::optional<Interval> {
        using P = std::decay_t<decltype(prim)>;
        if constexpr (std::is_same_v<P, HomogeneousBox>) {
          return intersect_box(ray, prim.min, prim.max);
        } else if constexpr (std::is_same_v<P, GaussianBlob>) {
          return intersect_sphere(ray, prim.center, prim.cutoff);
        } else {
          return intersect_sphere(ray, prim.center, prim.radius);
        }
      },
      p);
}

struct BoundingShape {
  bool is_box = false;
  Vec3 center = Vec3::Zero();
  double radius = 0;
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

BoundingShape bounding_shape(const Primitive& p) {
  return std::visit(
      [](const auto& prim) {
        using P = std::decay_t<decltype(prim)>;
        BoundingShape s;
        if constexpr (std::is_same_v<P, HomogeneousBox>) {
          s.is_box = true;
          s.lo = prim.min;
          s.hi = prim.max;
        } else if constexpr (std::is_same_v<P, GaussianBlob>) {
          s.center = prim.center;
          s.radius = prim.cutoff;
        } else {
          s.center = prim.center;
          s.radius = prim.radius;
        }
        return s;
      },
      p);
}

bool overlaps(const BoundingShape& a, const BoundingShape& b) {
  constexpr double kSlack = 1e-12;
  if (!a.is_box && !b.is_box) return (a.center - b.center).norm() < a.radius + b.radius - kSlack;
  if (a.is_box && b.is_box)
    return ((a.lo.array() < b.hi.array() - kSlack) && (b.lo.array() < a.hi.array() - kSlack)).all();
  const BoundingShape& box = a.is_box ? a : b;
  const BoundingShape& sphere = a.is_box ? b : a;
  const Vec3 closest = sphere.center.cwiseMax(box.lo).cwiseMin(box.hi);
  return (closest - sphere.center).norm() < sphere.radius - kSlack;
}

void check_color(const Vec3& c, const std::string& what) {
  if (!c.allFinite() || (c.array() < 0).any() || (c.array() > 1).any())
    throw InputError(what + ": color channels must lie in [0, 1]");
}

void validate_primitive(const Primitive& p, std::size_t index) {
  const std::string what = "primitive " + std::to_string(index);
  std::visit(
      [&](const auto& prim) {
        using P = std::decay_t<decltype(prim)>;
        check_color(prim.color, what);
        if constexpr (std::is_same_v<P, GaussianBlob>) {
          if (!(prim.peak >= 0)) throw InputError(what + ": density must be >= 0");
          if (!(prim.scale > 0) || !(prim.cutoff > 0))
            throw InputError(what + ": blob scale and cutoff must be positive");
        } else {
          if (!(prim.sigma >= 0)) throw InputError(what + ": density must be >= 0");
        }
        if constexpr (std::is_same_v<P, HomogeneousBox>) {
          if (!(prim.min.array() < prim.max.array()).all())
            throw InputError(what + ": box needs min < max");
        }
        if constexpr (std::is_same_v<P, HomogeneousSphere> || std::is_same_v<P, ViewTintedSphere>) {
          if (!(prim.radius > 0)) throw InputError(what + ": radius must be positive");
        }
        if constexpr (std::is_same_v<P, ViewTintedSphere>) {
          if (!prim.tint.allFinite()) throw InputError(what + ": tint must be finite");
        }
      },
      p);
}

Vec3 tinted_color(const ViewTintedSphere& s, const Vec3& x, const Vec3& d) {
  const Vec3 r = x - s.center;
  const double len = r.norm();
  const double cosine = len > 0 ? d.dot(r) / len : 0.0;
  return (s.color + s.tint * cosine).cwiseMax(0.0).cwiseMin(1.0);
}

// Emission integral over [t0, t1] of a tinted sphere, for unit entry transmittance.
Vec3 tinted_emission(const ViewTintedSphere& s, const Ray& ray, double t0, double t1) {
  using boost::math::quadrature::gauss_kronrod;
  const double opacity = -std::expm1(-s.sigma * (t1 - t0));
  if (s.tint.isZero()) return opacity * s.color;

  // The view cosine changes fastest where the ray passes closest to the center.
  const double t_mid = (s.center - ray.origin).dot(ray.direction);
  std::vector<double> cuts{t0};
  if (t_mid > t0 && t_mid < t1) cuts.push_back(t_mid);
  cuts.push_back(t1);
  auto integrate = [&](auto&& f) {
    double sum = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      sum += gauss_kronrod<double, 31>::integrate(f, cuts[k], cuts[k + 1], 15, 1e-12);
    return sum;
  };

  const bool never_clamped = ((s.color - s.tint.cwiseAbs()).array() >= 0).all() &&
                             ((s.color + s.tint.cwiseAbs()).array() <= 1).all();
  if (never_clamped) {
    // Color is affine in the cosine, so one scalar integral serves all channels.
    const double tinted = integrate([&](double t) {
      const Vec3 r = ray.at(t) - s.center;
      const double len = r.norm();
      const double cosine = len > 0 ? ray.direction.dot(r) / len : 0.0;
      return std::exp(-s.sigma * (t - t0)) * s.sigma * cosine;
    });
    return opacity * s.color + tinted * s.tint;
  }
  Vec3 out = Vec3::Zero();
  for (int ch = 0; ch < 3; ++ch)
    out[ch] = integrate([&](double t) {
      return std::exp(-s.sigma * (t - t0)) * s.sigma * tinted_color(s, ray.at(t), ray.direction)[ch];
    });
  return out;
}

}  // namespace

AnalyticScene::AnalyticScene(std::vector<Primitive> primitives, const Vec3& background)
    : primitives_(std::move(primitives)), background_(background) {
  check_color(background, "background");
  for (std::size_t i = 0; i < primitives_.size(); ++i) validate_primitive(primitives_[i], i);
  for (std::size_t i = 0; i < primitives_.size(); ++i)
    for (std::size_t j = i + 1; j < primitives_.size(); ++j)
      if (overlaps(bounding_shape(primitives_[i]), bounding_shape(primitives_[j])))
        throw InputError("primitives " + std::to_string(i) + " and " + std::to_string(j) +
                         " overlap");
}

double optical_depth(const Primitive& p, const Ray& ray, double a, double b) {
  if (!(a < b)) return 0.0;
  return std::visit(
      [&](const auto& prim) -> double {
        using P = std::decay_t<decltype(prim)>;
        if constexpr (std::is_same_v<P, GaussianBlob>) {
          const double t_mid = (prim.center - ray.origin).dot(ray.direction);
          const double b2 = (ray.at(t_mid) - prim.center).squaredNorm();
          const double s = prim.scale;
          const double k = 1.0 / (s * std::numbers::sqrt2);
          return prim.peak * std::exp(-b2 / (2 * s * s)) * s * std::sqrt(std::numbers::pi / 2) *
                 (std::erf((b - t_mid) * k) - std::erf((a - t_mid) * k));
        } else {
          return prim.sigma * (b - a);
        }
      },
      p);
}

Vec3 analytic_render_ray(const AnalyticScene& scene, const Ray& ray) {
  struct Hit {
    double t0, t1;
    const Primitive* prim;
  };
  std::vector<Hit> hits;
  for (const Primitive& p : scene.primitives()) {
    auto iv = support(p, ray);
    if (!iv) continue;
    const double t0 = std::max(iv->t0, ray.t_near);
    const double t1 = std::min(iv->t1, ray.t_far);
    if (t0 < t1) hits.push_back({t0, t1, &p});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.t0 < b.t0; });

  Vec3 color = Vec3::Zero();
  double trans = 1.0;
  for (const Hit& h : hits) {
    const double tau = optical_depth(*h.prim, ray, h.t0, h.t1);
    if (const auto* tinted = std::get_if<ViewTintedSphere>(h.prim)) {
      color += trans * tinted_emission(*tinted, ray, h.t0, h.t1);
    } else {
      const Vec3 c = std::visit([](const auto& prim) { return prim.color; }, *h.prim);
      color += trans * -std::expm1(-tau) * c;
    }
    trans *= std::exp(-tau);
  }
  return color + trans * scene.background();
}

FieldSample SceneField::evaluate(const Vec3& x, const Vec3& d) const {
  for (const Primitive& p : scene_.primitives()) {
    FieldSample s;
    const bool inside = std::visit(
        [&](const auto& prim) {
          using P = std::decay_t<decltype(prim)>;
          if constexpr (std::is_same_v<P, HomogeneousBox>) {
            if (!((x.array() >= prim.min.array()).all() && (x.array() <= prim.max.array()).all()))
              return false;
            s.sigma = prim.sigma;
            s.color = prim.color;
          } else if constexpr (std::is_same_v<P, GaussianBlob>) {
            const double r2 = (x - prim.center).squaredNorm();
            if (r2 > prim.cutoff * prim.cutoff) return false;
            s.sigma = prim.peak * std::exp(-r2 / (2 * prim.scale * prim.scale));
            s.color = prim.color;
          } else if constexpr (std::is_same_v<P, HomogeneousSphere>) {
            if ((x - prim.center).squaredNorm() > prim.radius * prim.radius) return false;
            s.sigma = prim.sigma;
            s.color = prim.color;
          } else {
            if ((x - prim.center).squaredNorm() > prim.radius * prim.radius) return false;
            s.sigma = prim.sigma;
            s.color = tinted_color(prim, x, d);
          }
          return true;
        },
        p);
    if (inside) return s;
  }
  return FieldSample{};
}

void SceneField::query_batch(std::span<const Vec3> positions, std::span<const Vec3> directions,
                             std::span<FieldSample> out) const {
  check_batch_shapes(positions.size(), directions.size(), out.size());
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = evaluate(positions[i], directions[i]);
}

Vec3 hemisphere_direction(double u1, double u2) {
  const double z = u1;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Image analytic_render_image(const AnalyticScene& scene, const Camera& camera, double t_near,
                            double t_far) {
  Image img(camera.width(), camera.height());
  const int height = camera.height();
#pragma omp parallel for schedule(dynamic, 1)
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < camera.width(); ++x)
      img.set(x, y, analytic_render_ray(scene, generate_ray(camera, x, y, t_near, t_far)));
  return img;
}

Dataset synth_dataset(const AnalyticScene& scene, const SynthOptions& opt) {
  if (opt.views < 2) throw InputError("synth_dataset needs at least two views");
  if (opt.holdout_every < 1) throw InputError("holdout_every must be at least 1");
  if (opt.width < 1 || opt.height < 1) throw InputError("image resolution must be at least 1x1");
  validate(opt.bounds);

  Dataset ds;
  ds.intrinsics.width = opt.width;
  ds.intrinsics.height = opt.height;
  ds.intrinsics.fx = ds.intrinsics.fy = opt.focal_scale * opt.width;
  ds.intrinsics.cx = 0.5 * opt.width;
  ds.intrinsics.cy = 0.5 * opt.height;

  const Vec3 center = opt.bounds.center();
  const double scene_radius = 0.5 * opt.bounds.extent().maxCoeff();
  const double half_diagonal = 0.5 * opt.bounds.extent().norm();
  const double distance = opt.distance_scale * scene_radius;
  if (!(distance > half_diagonal))
    throw InputError("cameras would sit inside the scene bounds; increase distance_scale");
  ds.scene.t_near = distance - half_diagonal;
  ds.scene.t_far = distance + half_diagonal;
  ds.scene.background = scene.background();
  ds.scene.bounds = opt.bounds;

  RandomStream rng({opt.seed, 0x68656d69ULL});
  for (int i = 0; i < opt.views; ++i) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    Frame f;
    f.pose = look_at(center + distance * hemisphere_direction(u1, u2), center);
    f.split = (i % opt.holdout_every == 0) ? Split::Test : Split::Train;
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.ppm", i);
    f.file = name;
    ds.frames.push_back(std::move(f));
  }
  for (std::size_t i = 0; i < ds.frames.size(); ++i)
    ds.frames[i].image = analytic_render_image(scene, ds.camera(i), ds.scene.t_near, ds.scene.t_far);
  return ds;
}

AnalyticScene two_sphere_scene(bool tinted) {
  HomogeneousSphere a;
  a.center = Vec3(-0.45, -0.2, 0.0);
  a.radius = 0.4;
  a.sigma = 20;
  a.color = Vec3(0.9, 0.3, 0.2);
  ViewTintedSphere b;
  b.center = Vec3(0.45, 0.25, 0.0);
  b.radius = 0.4;
  b.sigma = 20;
  b.color = Vec3(0.3, 0.55, 0.8);
  b.tint = tinted ? Vec3(0.2, 0.25, -0.15) : Vec3::Zero();
  return AnalyticScene({a, b}, Vec3::Ones());
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec_from(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 3) throw InputError(std::string("\"") + key + "\" must be a 3-vector");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

}  // namespace

nlohmann::json to_json(const AnalyticScene& scene) {
  nlohmann::json prims = nlohmann::json::array();
  for (const Primitive& p : scene.primitives()) {
    prims.push_back(std::visit(
        [](const auto& q) -> nlohmann::json {
          using P = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<P, HomogeneousSphere>)
            return {{"type", "sphere"}, {"center", vec_json(q.center)}, {"radius", q.radius},
                    {"sigma", q.sigma}, {"color", vec_json(q.color)}};
          else if constexpr (std::is_same_v<P, HomogeneousBox>)
            return {{"type", "box"}, {"min", vec_json(q.min)}, {"max", vec_json(q.max)},
                    {"sigma", q.sigma}, {"color", vec_json(q.color)}};
          else if constexpr (std::is_same_v<P, GaussianBlob>)
            return {{"type", "blob"}, {"center", vec_json(q.center)}, {"scale", q.scale},
                    {"peak", q.peak}, {"color", vec_json(q.color)}, {"cutoff", q.cutoff}};
          else
            return {{"type", "tinted_sphere"}, {"center", vec_json(q.center)}, {"radius", q.radius},
                    {"sigma", q.sigma}, {"color", vec_json(q.color)}, {"tint", vec_json(q.tint)}};
        },
        p));
  }
  return {{"background", vec_json(scene.background())}, {"primitives", prims}};
}

AnalyticScene scene_from_json(const nlohmann::json& j) {
  try {
    std::vector<Primitive> prims;
    for (const auto& p : j.at("primitives")) {
      const std::string type = p.at("type").get<std::string>();
      if (type == "sphere") {
        prims.push_back(HomogeneousSphere{vec_from(p, "center"), p.at("radius").get<double>(),
                                          p.at("sigma").get<double>(), vec_from(p, "color")});
      } else if (type == "box") {
        prims.push_back(HomogeneousBox{vec_from(p, "min"), vec_from(p, "max"),
                                       p.at("sigma").get<double>(), vec_from(p, "color")});
      } else if (type == "blob") {
        const double scale = p.at("scale").get<double>();
        prims.push_back(GaussianBlob{vec_from(p, "center"), scale, p.at("peak").get<double>(),
                                     vec_from(p, "color"), p.value("cutoff", 3 * scale)});
      } else if (type == "tinted_sphere") {
        prims.push_back(ViewTintedSphere{vec_from(p, "center"), p.at("radius").get<double>(),
                                         p.at("sigma").get<double>(), vec_from(p, "color"),
                                         vec_from(p, "tint")});
      } else {
        throw InputError("unknown primitive type \"" + type + "\"");
      }
    }
    const Vec3 bg = j.contains("background") ? vec_from(j, "background") : Vec3(Vec3::Ones());
    return AnalyticScene(std::move(prims), bg);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("scene description: ") + e.what());
  }
}

}  // namespace rf
