#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "radiance/common.hpp"

namespace rf {

// Sinusoidal lifting of each scalar p to
//   [p,] sin(2^0 pi p), cos(2^0 pi p), ..., sin(2^(L-1) pi p), cos(2^(L-1) pi p)
struct EncodingConfig {
  int octaves = 10;
  bool include_raw = true;

  int width_per_component() const { return 2 * octaves + (include_raw ? 1 : 0); }
  int output_width(int components) const { return components * width_per_component(); }
};

inline constexpr EncodingConfig kDefaultPositionEncoding{10, true};
inline constexpr EncodingConfig kDefaultDirectionEncoding{4, true};

void validate(const EncodingConfig& cfg);

std::vector<double> encode_scalar(double p, const EncodingConfig& cfg);
std::vector<double> encode_vector(std::span<const double> v, const EncodingConfig& cfg);

// Writes the encoding of `v` into `out` (length cfg.output_width(v.size())).
// No finiteness check; callers on hot paths validate inputs once up front.
template <typename T>
void encode_into(std::span<const double> v, const EncodingConfig& cfg, T* out) {
  for (double p : v) {
    if (cfg.include_raw) *out++ = static_cast<T>(p);
    double freq = std::numbers::pi;
    for (int k = 0; k < cfg.octaves; ++k) {
      const double arg = freq * p;
      *out++ = static_cast<T>(std::sin(arg));
      *out++ = static_cast<T>(std::cos(arg));
      freq *= 2.0;
    }
  }
}

}  // namespace rf
