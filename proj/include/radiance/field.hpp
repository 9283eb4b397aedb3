#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "radiance/common.hpp"

namespace rf {

struct FieldSample {
  double sigma = 0;          // density per unit length, >= 0
  Vec3 color = Vec3::Zero(); // emitted radiance, each channel in [0, 1]
};

struct SceneBounds {
  Vec3 min = Vec3::Constant(-1);
  Vec3 max = Vec3::Constant(1);

  bool contains(const Vec3& x) const {
    return (x.array() >= min.array()).all() && (x.array() <= max.array()).all();
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
};

void validate(const SceneBounds& bounds);

// Affine map of the box onto [-1, 1]^3 (center -> 0, corners -> +-1).
Vec3 normalize_position(const Vec3& x, const SceneBounds& bounds);

// A queryable radiance field: density depends on position only, color on
// position and view direction. Points outside the field's bounds are vacuum.
class RadianceField {
 public:
  virtual ~RadianceField() = default;

  virtual void query_batch(std::span<const Vec3> positions, std::span<const Vec3> directions,
                           std::span<FieldSample> out) const = 0;

  FieldSample query(const Vec3& x, const Vec3& d) const;
};

// Backend-specific record of a recorded batch query.
class FieldTape {
 public:
  virtual ~FieldTape() = default;
  bool consumed() const { return consumed_; }

 protected:
  void consume();

 private:
  bool consumed_ = false;
};

enum class Backend : std::uint32_t { Mlp = 1, Voxel = 2 };

std::string to_string(Backend backend);

// A field with a flat parameter vector of scalar type T and reverse-mode
// gradients with respect to it.
template <typename T>
class TrainableField : public RadianceField {
 public:
  using Scalar = T;

  virtual Backend backend() const = 0;
  virtual const SceneBounds& bounds() const = 0;
  // Architecture/config, enough to rebuild an identically shaped field.
  virtual nlohmann::json config() const = 0;

  virtual std::span<T> parameters() = 0;
  virtual std::span<const T> parameters() const = 0;

  virtual std::unique_ptr<FieldTape> query_batch_recorded(std::span<const Vec3> positions,
                                                          std::span<const Vec3> directions,
                                                          std::span<FieldSample> out) const = 0;

  // Accumulates sum_i (sigma_cot[i] * dsigma_i + <color_cot[i], dcolor_i>)
  // into `grad`. Consumes the tape.
  virtual void backward(FieldTape& tape, std::span<const double> sigma_cotangent,
                        std::span<const Vec3> color_cotangent, std::span<T> grad) const = 0;
};

void check_batch_shapes(std::size_t positions, std::size_t directions, std::size_t out);

}  // namespace rf
