#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "radiance/field.hpp"

namespace rf {

// Binary layout (all integers little-endian):
//   "RFLD" | u32 version | u32 backend tag | u32 n | n bytes of JSON
//   {"field": <backend config>, "meta": <free-form>} | u64 count |
//   count x f32 parameters | u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Backend backend = Backend::Mlp;
  nlohmann::json field_config;
  nlohmann::json meta;
  std::vector<float> parameters;
};

template <typename T>
Checkpoint make_checkpoint(const TrainableField<T>& field, nlohmann::json meta = nlohmann::json::object());

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const TrainableField<T>& field,
                     nlohmann::json meta = nlohmann::json::object()) {
  write_checkpoint(path, make_checkpoint(field, std::move(meta)));
}

// Rebuilds the field described by a checkpoint with its stored parameters.
std::unique_ptr<TrainableField<float>> instantiate(const Checkpoint& ckpt);

}  // namespace rf
