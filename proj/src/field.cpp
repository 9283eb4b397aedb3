#include "radiance/field.hpp"

namespace rf {

void validate(const SceneBounds& bounds) {
  if (!bounds.min.allFinite() || !bounds.max.allFinite() ||
      !(bounds.min.array() < bounds.max.array()).all())
    throw InputError("scene bounds need min < max componentwise");
}

Vec3 normalize_position(const Vec3& x, const SceneBounds& bounds) {
  return (2.0 * (x - bounds.min).array() / bounds.extent().array() - 1.0).matrix();
}

FieldSample RadianceField::query(const Vec3& x, const Vec3& d) const {
  FieldSample s;
  query_batch(std::span<const Vec3>(&x, 1), std::span<const Vec3>(&d, 1),
              std::span<FieldSample>(&s, 1));
  return s;
}

void FieldTape::consume() {
  if (consumed_) throw UsageError("field tape already consumed by a backward pass");
  consumed_ = true;
}

std::string to_string(Backend backend) {
  switch (backend) {
    case Backend::Mlp:
      return "mlp";
    case Backend::Voxel:
      return "voxel";
  }
  return "unknown";
}

void check_batch_shapes(std::size_t positions, std::size_t directions, std::size_t out) {
  if (positions != directions || positions != out)
    throw InputError("field batch: positions, directions and outputs differ in length");
}

}  // namespace rf
