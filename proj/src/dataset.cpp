#include "radiance/dataset.hpp"

#include <fstream>

namespace rf {

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw FormatError("unknown split tag '" + s + "'");
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].split == split) out.push_back(i);
  return out;
}

namespace {

Dataset parse_manifest(const nlohmann::json& m, bool require_frames);

nlohmann::json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

nlohmann::json manifest_json(const Dataset& ds) {
  nlohmann::json frames = nlohmann::json::array();
  for (const Frame& f : ds.frames) {
    nlohmann::json transform = nlohmann::json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) transform.push_back(f.pose(r, c));
    frames.push_back({{"file", f.file}, {"transform", transform}, {"split", to_string(f.split)}});
  }
  const Intrinsics& k = ds.intrinsics;
  return {
      {"camera", {{"w", k.width}, {"h", k.height}, {"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}},
      {"frames", frames},
      {"scene",
       {{"t_near", ds.scene.t_near},
        {"t_far", ds.scene.t_far},
        {"background", vec3_json(ds.scene.background)},
        {"bounds", {{"min", vec3_json(ds.scene.bounds.min)}, {"max", vec3_json(ds.scene.bounds.max)}}}}},
  };
}

nlohmann::json rendering_meta_json(const Dataset& dataset) {
  nlohmann::json m = manifest_json(dataset);
  m.erase("frames");
  return m;
}

Dataset dataset_from_rendering_meta(const nlohmann::json& meta) {
  nlohmann::json m = meta;
  m["frames"] = nlohmann::json::array();
  return parse_manifest(m, false);
}

Dataset dataset_from_manifest(const nlohmann::json& m) { return parse_manifest(m, true); }

namespace {

Dataset parse_manifest(const nlohmann::json& m, bool require_frames) {
  Dataset ds;
  try {
    const auto& cam = m.at("camera");
    ds.intrinsics.width = cam.at("w").get<int>();
    ds.intrinsics.height = cam.at("h").get<int>();
    ds.intrinsics.fx = cam.at("fx").get<double>();
    ds.intrinsics.fy = cam.at("fy").get<double>();
    ds.intrinsics.cx = cam.at("cx").get<double>();
    ds.intrinsics.cy = cam.at("cy").get<double>();
    const auto& scene = m.at("scene");
    ds.scene.t_near = scene.at("t_near").get<double>();
    ds.scene.t_far = scene.at("t_far").get<double>();
    ds.scene.background = vec3_from(scene.at("background"));
    ds.scene.bounds.min = vec3_from(scene.at("bounds").at("min"));
    ds.scene.bounds.max = vec3_from(scene.at("bounds").at("max"));
    for (const auto& jf : m.at("frames")) {
      Frame f;
      f.file = jf.at("file").get<std::string>();
      const auto& t = jf.at("transform");
      if (!t.is_array() || t.size() != 16)
        throw FormatError("frame '" + f.file + "': transform needs 16 numbers");
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) f.pose(r, c) = t[static_cast<std::size_t>(4 * r + c)].get<double>();
      f.split = split_from_string(jf.at("split").get<std::string>());
      ds.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  if (require_frames && ds.frames.empty()) throw FormatError("manifest: frames list is empty");
  if (ds.intrinsics.width < 1 || ds.intrinsics.height < 1 || !(ds.intrinsics.fx > 0) ||
      !(ds.intrinsics.fy > 0))
    throw FormatError("manifest: invalid camera intrinsics");
  if (!(ds.scene.t_near >= 0) || !(ds.scene.t_near < ds.scene.t_far))
    throw FormatError("manifest: need 0 <= t_near < t_far");
  try {
    validate(ds.scene.bounds);
  } catch (const InputError& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  for (const Frame& f : ds.frames) {
    try {
      validate_pose(f.pose);
    } catch (const InputError& e) {
      throw FormatError("frame '" + f.file + "': " + e.what());
    }
  }
  return ds;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Frame& f : ds.frames) write_ppm(dir / f.file, f.image);
  std::ofstream out(dir / kManifestName);
  if (!out) throw FormatError("cannot write manifest in " + dir.string());
  out << manifest_json(ds).dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw FormatError("missing " + (dir / kManifestName).string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  Dataset ds = dataset_from_manifest(m);
  for (Frame& f : ds.frames) {
    const auto path = dir / f.file;
    if (!std::filesystem::exists(path)) throw FormatError("frame '" + f.file + "': image file missing");
    try {
      f.image = read_ppm(path);
    } catch (const FormatError& e) {
      throw FormatError("frame '" + f.file + "': " + e.what());
    }
    if (f.image.width != ds.intrinsics.width || f.image.height != ds.intrinsics.height)
      throw FormatError("frame '" + f.file + "': image is " + std::to_string(f.image.width) + "x" +
                        std::to_string(f.image.height) + ", manifest declares " +
                        std::to_string(ds.intrinsics.width) + "x" + std::to_string(ds.intrinsics.height));
  }
  return ds;
}

}  // namespace rf
