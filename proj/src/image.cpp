#include "radiance/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace rf {

Image::Image(int w, int h, const Vec3& fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw InputError("image dimensions must be at least 1x1");
  rgb.resize(3 * pixel_count());
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    rgb[3 * i] = fill.x();
    rgb[3 * i + 1] = fill.y();
    rgb[3 * i + 2] = fill.z();
  }
}

Vec3 Image::mean() const {
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < pixel_count(); ++i) sum += Vec3(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  return sum / static_cast<double>(pixel_count());
}

std::vector<unsigned char> encode_ppm(const Image& image) {
  if (image.width < 1 || image.height < 1) throw InputError("cannot encode an empty image");
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + image.rgb.size());
  for (double v : image.rgb) {
    const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    bytes.push_back(static_cast<unsigned char>(std::lround(c * 255.0)));
  }
  return bytes;
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) t.push_back(static_cast<char>(bytes_[pos_++]));
    if (t.empty()) throw FormatError("ppm: truncated header");
    return t;
  }

  int number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw FormatError("ppm: expected a number in header, got '" + t + "'");
    return std::stoi(t);
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw FormatError("ppm: malformed header end");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_ppm(const std::vector<unsigned char>& bytes) {
  HeaderReader reader(bytes);
  if (reader.token() != "P6") throw FormatError("ppm: missing P6 magic");
  const int w = reader.number();
  const int h = reader.number();
  const int maxval = reader.number();
  if (w < 1 || h < 1) throw FormatError("ppm: non-positive dimensions");
  if (maxval != 255) throw FormatError("ppm: only 8-bit (maxval 255) images are supported");
  const std::size_t start = reader.raster_start();
  const std::size_t expected = 3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - start != expected) throw FormatError("ppm: raster size does not match header");
  Image img(w, h);
  for (std::size_t i = 0; i < expected; ++i) img.rgb[i] = bytes[start + i] / 255.0;
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

double mse(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw InputError("image dimensions differ (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
  double sum = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = a.rgb[i] - b.rgb[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.rgb.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kInfinitePsnr;
  return -10.0 * std::log10(e);
}

}  // namespace rf
