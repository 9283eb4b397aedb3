#pragma once

#include <array>

#include "radiance/field.hpp"

namespace rf {

struct VoxelFieldConfig {
  SceneBounds bounds;
  std::array<int, 3> resolution{32, 32, 32};
  // 0: one RGB value per voxel; 1: per channel {1, dx, dy, dz} coefficients.
  int color_degree = 0;
  double initial_density = 0.05;
};

nlohmann::json to_json(const VoxelFieldConfig& cfg);
VoxelFieldConfig voxel_field_config_from_json(const nlohmann::json& j);

// Explicit uniform grid with values at voxel centers. Each voxel's density
// (softplus of the stored value) and color (logistic of the basis expansion)
// are activated first and then blended with trilinear weights, so queries
// inherit the per-voxel ranges. Between the outermost centers and the box
// faces the grid is extended by clamping.
template <typename T>
class VoxelField final : public TrainableField<T> {
 public:
  explicit VoxelField(const VoxelFieldConfig& cfg);

  const VoxelFieldConfig& settings() const { return cfg_; }
  std::size_t voxel_count() const { return voxels_; }
  int basis_size() const { return cfg_.color_degree == 0 ? 1 : 4; }
  std::size_t voxel_index(int ix, int iy, int iz) const;
  Vec3 voxel_center(int ix, int iy, int iz) const;

  // Raw stored values for one voxel.
  T& density_param(std::size_t voxel) { return params_[voxel]; }
  T& color_param(std::size_t voxel, int channel, int basis) {
    return params_[color_offset(voxel, channel, basis)];
  }
  std::size_t density_offset(std::size_t voxel) const { return voxel; }
  std::size_t color_offset(std::size_t voxel, int channel, int basis) const {
    return voxels_ + (voxel * 3 + static_cast<std::size_t>(channel)) *
                         static_cast<std::size_t>(basis_size()) +
           static_cast<std::size_t>(basis);
  }

  Backend backend() const override { return Backend::Voxel; }
  const SceneBounds& bounds() const override { return cfg_.bounds; }
  nlohmann::json config() const override { return to_json(cfg_); }
  std::span<T> parameters() override { return params_; }
  std::span<const T> parameters() const override { return params_; }

  void query_batch(std::span<const Vec3> positions, std::span<const Vec3> directions,
                   std::span<FieldSample> out) const override;
  std::unique_ptr<FieldTape> query_batch_recorded(std::span<const Vec3> positions,
                                                  std::span<const Vec3> directions,
                                                  std::span<FieldSample> out) const override;
  void backward(FieldTape& tape, std::span<const double> sigma_cotangent,
                std::span<const Vec3> color_cotangent, std::span<T> grad) const override;

  struct Stencil {
    std::array<std::size_t, 8> voxel{};
    std::array<double, 8> weight{};
  };
  // Eight neighbouring voxels and their trilinear weights; false outside the box.
  bool stencil(const Vec3& x, Stencil& out) const;

 private:
  FieldSample evaluate(const Vec3& x, const Vec3& d) const;

  VoxelFieldConfig cfg_;
  std::size_t voxels_ = 0;
  std::vector<T> params_;
};

extern template class VoxelField<float>;
extern template class VoxelField<double>;

}  // namespace rf
