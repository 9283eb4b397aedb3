#include "radiance/voxel_field.hpp"

#include <algorithm>

#include "radiance/mlp.hpp"

namespace rf {

nlohmann::json to_json(const VoxelFieldConfig& cfg) {
  return {
      {"bounds", {{"min", {cfg.bounds.min.x(), cfg.bounds.min.y(), cfg.bounds.min.z()}},
                  {"max", {cfg.bounds.max.x(), cfg.bounds.max.y(), cfg.bounds.max.z()}}}},
      {"resolution", cfg.resolution},
      {"color_degree", cfg.color_degree},
      {"initial_density", cfg.initial_density},
  };
}

VoxelFieldConfig voxel_field_config_from_json(const nlohmann::json& j) {
  VoxelFieldConfig cfg;
  const auto& b = j.at("bounds");
  for (int k = 0; k < 3; ++k) {
    cfg.bounds.min[k] = b.at("min").at(k).get<double>();
    cfg.bounds.max[k] = b.at("max").at(k).get<double>();
  }
  cfg.resolution = j.at("resolution").get<std::array<int, 3>>();
  cfg.color_degree = j.at("color_degree").get<int>();
  cfg.initial_density = j.at("initial_density").get<double>();
  return cfg;
}

namespace {

struct VoxelTape final : FieldTape {
  std::vector<Vec3> positions;
  std::vector<Vec3> directions;

  void mark_consumed() { consume(); }
};

std::array<double, 4> basis(const Vec3& d, int degree) {
  if (degree == 0) return {1.0, 0.0, 0.0, 0.0};
  return {1.0, d.x(), d.y(), d.z()};
}

}  // namespace

template <typename T>
VoxelField<T>::VoxelField(const VoxelFieldConfig& cfg) : cfg_(cfg) {
  validate(cfg.bounds);
  for (int n : cfg.resolution)
    if (n < 1) throw InputError("voxel resolution must be at least 1 per axis");
  if (cfg.color_degree != 0 && cfg.color_degree != 1)
    throw InputError("voxel color degree must be 0 or 1");
  if (!(cfg.initial_density > 0)) throw InputError("initial voxel density must be positive");
  voxels_ = static_cast<std::size_t>(cfg.resolution[0]) * static_cast<std::size_t>(cfg.resolution[1]) *
            static_cast<std::size_t>(cfg.resolution[2]);
  params_.assign(voxels_ * (1 + 3 * static_cast<std::size_t>(basis_size())), T(0));
  const T init = static_cast<T>(inverse_softplus(cfg.initial_density));
  std::fill(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(voxels_), init);
}

template <typename T>
std::size_t VoxelField<T>::voxel_index(int ix, int iy, int iz) const {
  return (static_cast<std::size_t>(iz) * static_cast<std::size_t>(cfg_.resolution[1]) +
          static_cast<std::size_t>(iy)) *
             static_cast<std::size_t>(cfg_.resolution[0]) +
         static_cast<std::size_t>(ix);
}

template <typename T>
Vec3 VoxelField<T>::voxel_center(int ix, int iy, int iz) const {
  const Vec3 h = cfg_.bounds.extent().array() /
                 Eigen::Array3d(cfg_.resolution[0], cfg_.resolution[1], cfg_.resolution[2]);
  return cfg_.bounds.min + Vec3((ix + 0.5) * h.x(), (iy + 0.5) * h.y(), (iz + 0.5) * h.z());
}

template <typename T>
bool VoxelField<T>::stencil(const Vec3& x, Stencil& out) const {
  if (!cfg_.bounds.contains(x)) return false;
  std::array<int, 3> lo{};
  std::array<int, 3> hi{};
  std::array<double, 3> frac{};
  for (int k = 0; k < 3; ++k) {
    const int n = cfg_.resolution[static_cast<std::size_t>(k)];
    const double u = (x[k] - cfg_.bounds.min[k]) / cfg_.bounds.extent()[k] * n - 0.5;
    const double clamped = std::clamp(u, 0.0, static_cast<double>(n - 1));
    int i0 = std::min(static_cast<int>(clamped), std::max(n - 2, 0));
    lo[static_cast<std::size_t>(k)] = i0;
    hi[static_cast<std::size_t>(k)] = std::min(i0 + 1, n - 1);
    frac[static_cast<std::size_t>(k)] = n == 1 ? 0.0 : clamped - i0;
  }
  for (int c = 0; c < 8; ++c) {
    const int ix = (c & 1) ? hi[0] : lo[0];
    const int iy = (c & 2) ? hi[1] : lo[1];
    const int iz = (c & 4) ? hi[2] : lo[2];
    const double wx = (c & 1) ? frac[0] : 1.0 - frac[0];
    const double wy = (c & 2) ? frac[1] : 1.0 - frac[1];
    const double wz = (c & 4) ? frac[2] : 1.0 - frac[2];
    out.voxel[static_cast<std::size_t>(c)] = voxel_index(ix, iy, iz);
    out.weight[static_cast<std::size_t>(c)] = wx * wy * wz;
  }
  return true;
}

template <typename T>
FieldSample VoxelField<T>::evaluate(const Vec3& x, const Vec3& d) const {
  FieldSample s;
  Stencil st;
  if (!stencil(x, st)) return s;
  const auto b = basis(d, cfg_.color_degree);
  const int nb = basis_size();
  for (std::size_t c = 0; c < 8; ++c) {
    const double w = st.weight[c];
    if (w == 0.0) continue;
    const std::size_t v = st.voxel[c];
    s.sigma += w * softplus(static_cast<double>(params_[density_offset(v)]));
    for (int ch = 0; ch < 3; ++ch) {
      double z = 0;
      for (int k = 0; k < nb; ++k)
        z += static_cast<double>(params_[color_offset(v, ch, k)]) * b[static_cast<std::size_t>(k)];
      s.color[ch] += w * logistic(z);
    }
  }
  return s;
}

template <typename T>
void VoxelField<T>::query_batch(std::span<const Vec3> positions, std::span<const Vec3> directions,
                                std::span<FieldSample> out) const {
  check_batch_shapes(positions.size(), directions.size(), out.size());
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = evaluate(positions[i], directions[i]);
}

template <typename T>
std::unique_ptr<FieldTape> VoxelField<T>::query_batch_recorded(std::span<const Vec3> positions,
                                                               std::span<const Vec3> directions,
                                                               std::span<FieldSample> out) const {
  query_batch(positions, directions, out);
  auto tape = std::make_unique<VoxelTape>();
  tape->positions.assign(positions.begin(), positions.end());
  tape->directions.assign(directions.begin(), directions.end());
  return tape;
}

template <typename T>
void VoxelField<T>::backward(FieldTape& base, std::span<const double> sigma_cotangent,
                             std::span<const Vec3> color_cotangent, std::span<T> grad) const {
  auto* tape = dynamic_cast<VoxelTape*>(&base);
  if (tape == nullptr) throw InputError("tape was not recorded by a voxel field");
  if (sigma_cotangent.size() != tape->positions.size() ||
      color_cotangent.size() != tape->positions.size())
    throw InputError("cotangent batch does not match the recorded batch");
  if (grad.size() != params_.size()) throw InputError("gradient buffer size mismatch");
  tape->mark_consumed();

  const int nb = basis_size();
  for (std::size_t i = 0; i < tape->positions.size(); ++i) {
    Stencil st;
    if (!stencil(tape->positions[i], st)) continue;
    const auto b = basis(tape->directions[i], cfg_.color_degree);
    const double gs = sigma_cotangent[i];
    const Vec3& gc = color_cotangent[i];
    for (std::size_t c = 0; c < 8; ++c) {
      const double w = st.weight[c];
      if (w == 0.0) continue;
      const std::size_t v = st.voxel[c];
      if (gs != 0.0)
        grad[density_offset(v)] +=
            static_cast<T>(gs * w * logistic(static_cast<double>(params_[density_offset(v)])));
      for (int ch = 0; ch < 3; ++ch) {
        if (gc[ch] == 0.0) continue;
        double z = 0;
        for (int k = 0; k < nb; ++k)
          z += static_cast<double>(params_[color_offset(v, ch, k)]) * b[static_cast<std::size_t>(k)];
        const double s = logistic(z);
        const double g = gc[ch] * w * s * (1.0 - s);
        for (int k = 0; k < nb; ++k)
          grad[color_offset(v, ch, k)] += static_cast<T>(g * b[static_cast<std::size_t>(k)]);
      }
    }
  }
}

template class VoxelField<float>;
template class VoxelField<double>;

}  // namespace rf
