#pragma once

#include "radiance/encoding.hpp"
#include "radiance/field.hpp"
#include "radiance/mlp.hpp"

namespace rf {

struct MlpFieldConfig {
  SceneBounds bounds;
  EncodingConfig position_encoding = kDefaultPositionEncoding;
  EncodingConfig direction_encoding = kDefaultDirectionEncoding;
  int depth = 4;         // trunk hidden layers
  int width = 64;        // trunk width, also the feature width
  int color_width = 32;  // hidden width of the view-dependent color branch
};

nlohmann::json to_json(const MlpFieldConfig& cfg);
MlpFieldConfig mlp_field_config_from_json(const nlohmann::json& j);

// Neural backend. Encoded position -> trunk -> (density logit, features);
// the encoded direction joins the features only in the color branch, so the
// density can never depend on the view direction.
template <typename T>
class MlpField final : public TrainableField<T> {
 public:
  explicit MlpField(const MlpFieldConfig& cfg, std::uint64_t seed = 0);

  const MlpFieldConfig& settings() const { return cfg_; }
  const MlpSpec& trunk_spec() const { return trunk_; }
  const MlpSpec& color_spec() const { return color_; }
  std::span<T> trunk_parameters() { return std::span<T>(params_).first(trunk_size_); }
  std::span<T> color_parameters() { return std::span<T>(params_).subspan(trunk_size_); }

  Backend backend() const override { return Backend::Mlp; }
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

 private:
  std::unique_ptr<FieldTape> evaluate(std::span<const Vec3> positions,
                                      std::span<const Vec3> directions,
                                      std::span<FieldSample> out, bool record) const;

  MlpFieldConfig cfg_;
  MlpSpec trunk_;
  MlpSpec color_;
  std::size_t trunk_size_ = 0;
  std::vector<T> params_;
};

extern template class MlpField<float>;
extern template class MlpField<double>;

}  // namespace rf
