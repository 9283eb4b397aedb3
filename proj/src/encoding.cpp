#include "radiance/encoding.hpp"

#include <algorithm>

namespace rf {

void validate(const EncodingConfig& cfg) {
  if (cfg.octaves < 0) throw InputError("encoding octave count must be non-negative");
}

std::vector<double> encode_vector(std::span<const double> v, const EncodingConfig& cfg) {
  validate(cfg);
  if (!std::all_of(v.begin(), v.end(), [](double p) { return std::isfinite(p); }))
    throw InputError("positional encoding input must be finite");
  std::vector<double> out(static_cast<std::size_t>(cfg.output_width(static_cast<int>(v.size()))));
  encode_into(v, cfg, out.data());
  return out;
}

std::vector<double> encode_scalar(double p, const EncodingConfig& cfg) {
  return encode_vector(std::span<const double>(&p, 1), cfg);
}

}  // namespace rf
