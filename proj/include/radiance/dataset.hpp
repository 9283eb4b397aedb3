#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "radiance/field.hpp"
#include "radiance/geometry.hpp"
#include "radiance/image.hpp"

namespace rf {

enum class Split { Train, Test };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

struct Frame {
  std::string file;  // image path relative to the dataset directory
  Mat4 pose = Mat4::Identity();  // camera-to-world
  Split split = Split::Train;
  Image image;
};

struct SceneMeta {
  double t_near = 0;
  double t_far = 1;
  Vec3 background = Vec3::Ones();
  SceneBounds bounds;
};

struct Dataset {
  Intrinsics intrinsics;
  std::vector<Frame> frames;
  SceneMeta scene;

  Camera camera(std::size_t frame) const { return Camera(intrinsics, frames[frame].pose); }
  std::vector<std::size_t> indices(Split split) const;
};

inline constexpr const char* kManifestName = "manifest.json";

// manifest.json holds camera{w,h,fx,fy,cx,cy},
// frames[{file, transform (16 numbers, row-major camera-to-world), split}]
// and scene{t_near, t_far, background, bounds{min, max}}; images are P6 PPM.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

nlohmann::json manifest_json(const Dataset& dataset);
// Parses a manifest without touching image files (frames get empty images).
Dataset dataset_from_manifest(const nlohmann::json& manifest);

// The manifest's "camera" and "scene" blocks alone; enough to render new views.
nlohmann::json rendering_meta_json(const Dataset& dataset);
// Inverse of rendering_meta_json: intrinsics and scene metadata, no frames.
Dataset dataset_from_rendering_meta(const nlohmann::json& meta);

}  // namespace rf
