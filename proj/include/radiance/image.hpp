#pragma once

#include <filesystem>
#include <limits>
#include <vector>

#include "radiance/common.hpp"

namespace rf {

// Linear RGB image, values nominally in [0, 1], stored row-major interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int w, int h, const Vec3& fill = Vec3::Zero());

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  Vec3 at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set(int x, int y, const Vec3& c) {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    rgb[i] = c.x();
    rgb[i + 1] = c.y();
    rgb[i + 2] = c.z();
  }
  Vec3 mean() const;
};

// Binary PPM (P6, maxval 255); channels stored as round(clamp(v, 0, 1) * 255).
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);
std::vector<unsigned char> encode_ppm(const Image& image);
Image decode_ppm(const std::vector<unsigned char>& bytes);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

double mse(const Image& a, const Image& b);
// -10 log10(MSE); identical images give kInfinitePsnr.
double psnr(const Image& a, const Image& b);

}  // namespace rf
