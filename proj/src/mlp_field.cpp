#include "radiance/mlp_field.hpp"

#include <optional>

namespace rf {

nlohmann::json to_json(const MlpFieldConfig& cfg) {
  return {
      {"bounds", {{"min", {cfg.bounds.min.x(), cfg.bounds.min.y(), cfg.bounds.min.z()}},
                  {"max", {cfg.bounds.max.x(), cfg.bounds.max.y(), cfg.bounds.max.z()}}}},
      {"position_encoding",
       {{"octaves", cfg.position_encoding.octaves},
        {"include_raw", cfg.position_encoding.include_raw}}},
      {"direction_encoding",
       {{"octaves", cfg.direction_encoding.octaves},
        {"include_raw", cfg.direction_encoding.include_raw}}},
      {"depth", cfg.depth},
      {"width", cfg.width},
      {"color_width", cfg.color_width},
  };
}

namespace {

Vec3 vec3_from_json(const nlohmann::json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

EncodingConfig encoding_from_json(const nlohmann::json& j) {
  return EncodingConfig{j.at("octaves").get<int>(), j.at("include_raw").get<bool>()};
}

}  // namespace

MlpFieldConfig mlp_field_config_from_json(const nlohmann::json& j) {
  MlpFieldConfig cfg;
  cfg.bounds.min = vec3_from_json(j.at("bounds").at("min"));
  cfg.bounds.max = vec3_from_json(j.at("bounds").at("max"));
  cfg.position_encoding = encoding_from_json(j.at("position_encoding"));
  cfg.direction_encoding = encoding_from_json(j.at("direction_encoding"));
  cfg.depth = j.at("depth").get<int>();
  cfg.width = j.at("width").get<int>();
  cfg.color_width = j.at("color_width").get<int>();
  return cfg;
}

namespace {

template <typename T>
struct MlpFieldTape final : FieldTape {
  std::vector<std::size_t> index;  // compact column -> batch position
  Matrix<T> density_logit;         // 1 x m
  std::optional<GradientTape<T>> trunk;
  std::optional<GradientTape<T>> color;
  std::size_t batch = 0;

  void mark_consumed() { consume(); }
};

}  // namespace

template <typename T>
MlpField<T>::MlpField(const MlpFieldConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  validate(cfg.bounds);
  validate(cfg.position_encoding);
  validate(cfg.direction_encoding);
  if (cfg.depth < 1 || cfg.width < 1 || cfg.color_width < 1)
    throw InputError("MLP field needs depth, width and color width >= 1");

  trunk_.inputs = cfg.position_encoding.output_width(3);
  trunk_.hidden.assign(static_cast<std::size_t>(cfg.depth), cfg.width);
  trunk_.outputs = cfg.width + 1;
  trunk_.hidden_activation = Activation::Relu;
  trunk_.output_activation = Activation::Identity;
  trunk_.density_output = 0;

  color_.inputs = cfg.width + cfg.direction_encoding.output_width(3);
  color_.hidden = {cfg.color_width};
  color_.outputs = 3;
  color_.hidden_activation = Activation::Relu;
  color_.output_activation = Activation::Logistic;

  trunk_size_ = trunk_.parameter_count();
  params_.assign(trunk_size_ + color_.parameter_count(), T(0));
  init_params<T>(std::span<T>(params_).first(trunk_size_), trunk_, seed);
  init_params<T>(std::span<T>(params_).subspan(trunk_size_), color_, seed ^ 0xc0101ULL);
}

template <typename T>
std::unique_ptr<FieldTape> MlpField<T>::evaluate(std::span<const Vec3> positions,
                                                 std::span<const Vec3> directions,
                                                 std::span<FieldSample> out, bool record) const {
  check_batch_shapes(positions.size(), directions.size(), out.size());
  auto tape = std::make_unique<MlpFieldTape<T>>();
  tape->batch = positions.size();

  std::vector<std::size_t>& index = tape->index;
  index.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out[i] = FieldSample{};
    if (cfg_.bounds.contains(positions[i])) index.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(index.size());
  if (m == 0) return record ? std::unique_ptr<FieldTape>(std::move(tape)) : nullptr;

  const int dir_width = cfg_.direction_encoding.output_width(3);
  Matrix<T> x0(trunk_.inputs, m);
  Matrix<T> dir_enc(dir_width, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const std::size_t i = index[static_cast<std::size_t>(c)];
    const Vec3 p = normalize_position(positions[i], cfg_.bounds);
    encode_into<T>(std::span<const double>(p.data(), 3), cfg_.position_encoding, x0.col(c).data());
    encode_into<T>(std::span<const double>(directions[i].data(), 3), cfg_.direction_encoding,
                   dir_enc.col(c).data());
  }

  const std::span<const T> all(params_);
  auto trunk = forward<T>(all.first(trunk_size_), trunk_, x0, record);
  Matrix<T> color_in(color_.inputs, m);
  color_in.topRows(cfg_.width) = trunk.output.bottomRows(cfg_.width);
  color_in.bottomRows(dir_width) = dir_enc;
  auto color = forward<T>(all.subspan(trunk_size_), color_, color_in, record);

  for (Eigen::Index c = 0; c < m; ++c) {
    FieldSample& s = out[index[static_cast<std::size_t>(c)]];
    s.sigma = softplus(static_cast<double>(trunk.output(0, c)));
    s.color = Vec3(static_cast<double>(color.output(0, c)), static_cast<double>(color.output(1, c)),
                   static_cast<double>(color.output(2, c)));
  }
  if (!record) return nullptr;
  tape->density_logit = trunk.output.topRows(1);
  tape->trunk = std::move(trunk.tape);
  tape->color = std::move(color.tape);
  return tape;
}

template <typename T>
void MlpField<T>::query_batch(std::span<const Vec3> positions, std::span<const Vec3> directions,
                              std::span<FieldSample> out) const {
  evaluate(positions, directions, out, false);
}

template <typename T>
std::unique_ptr<FieldTape> MlpField<T>::query_batch_recorded(std::span<const Vec3> positions,
                                                             std::span<const Vec3> directions,
                                                             std::span<FieldSample> out) const {
  return evaluate(positions, directions, out, true);
}

template <typename T>
void MlpField<T>::backward(FieldTape& base, std::span<const double> sigma_cotangent,
                           std::span<const Vec3> color_cotangent, std::span<T> grad) const {
  auto* tape = dynamic_cast<MlpFieldTape<T>*>(&base);
  if (tape == nullptr) throw InputError("tape was not recorded by an MLP field of this type");
  if (sigma_cotangent.size() != tape->batch || color_cotangent.size() != tape->batch)
    throw InputError("cotangent batch does not match the recorded batch");
  if (grad.size() != params_.size()) throw InputError("gradient buffer size mismatch");
  tape->mark_consumed();

  const auto m = static_cast<Eigen::Index>(tape->index.size());
  if (m == 0) return;

  Matrix<T> d_rgb(3, m);
  Matrix<T> d_trunk(trunk_.outputs, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const std::size_t i = tape->index[static_cast<std::size_t>(c)];
    for (int k = 0; k < 3; ++k) d_rgb(k, c) = static_cast<T>(color_cotangent[i][k]);
    const double z = static_cast<double>(tape->density_logit(0, c));
    d_trunk(0, c) = static_cast<T>(sigma_cotangent[i] * logistic(z));
  }

  const std::span<const T> all(params_);
  Matrix<T> d_color_in =
      rf::backward<T>(all.subspan(trunk_size_), color_, *tape->color, d_rgb, grad.subspan(trunk_size_));
  d_trunk.bottomRows(cfg_.width) = d_color_in.topRows(cfg_.width);
  rf::backward<T>(all.first(trunk_size_), trunk_, *tape->trunk, d_trunk, grad.first(trunk_size_));
}

template class MlpField<float>;
template class MlpField<double>;

}  // namespace rf
