#include "radiance/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "radiance/mlp_field.hpp"
#include "radiance/voxel_field.hpp"

namespace rf {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'L', 'D'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const unsigned char* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

template <typename T>
Checkpoint make_checkpoint(const TrainableField<T>& field, nlohmann::json meta) {
  Checkpoint c;
  c.backend = field.backend();
  c.field_config = field.config();
  c.meta = std::move(meta);
  const auto p = field.parameters();
  c.parameters.reserve(p.size());
  for (T v : p) c.parameters.push_back(static_cast<float>(v));
  return c;
}

template Checkpoint make_checkpoint<float>(const TrainableField<float>&, nlohmann::json);
template Checkpoint make_checkpoint<double>(const TrainableField<double>&, nlohmann::json);

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.backend));
  const std::string cfg = nlohmann::json{{"field", ckpt.field_config}, {"meta", ckpt.meta}}.dump();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.insert(out.end(), cfg.begin(), cfg.end());
  put_u64(out, ckpt.parameters.size());
  for (float v : ckpt.parameters) put_u32(out, std::bit_cast<std::uint32_t>(v));
  put_u32(out, crc(out.data(), out.size()));
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic (expected RFLD)");
  if (bytes.size() < 8) throw FormatError("checkpoint: truncated file");
  Reader r(bytes);
  r.text(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  if (bytes.size() < 4) throw FormatError("checkpoint: truncated file");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
  if (crc(bytes.data(), body) != stored) throw FormatError("checkpoint: checksum mismatch");

  Checkpoint c;
  const std::uint32_t tag = r.u32();
  if (tag != static_cast<std::uint32_t>(Backend::Mlp) && tag != static_cast<std::uint32_t>(Backend::Voxel))
    throw FormatError("checkpoint: unknown backend tag " + std::to_string(tag));
  c.backend = static_cast<Backend>(tag);
  const std::uint32_t cfg_len = r.u32();
  try {
    const auto cfg = nlohmann::json::parse(r.text(cfg_len));
    c.field_config = cfg.at("field");
    c.meta = cfg.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad config block: ") + e.what());
  }
  const std::uint64_t count = r.u64();
  if (count > (body - r.position()) / 4) throw FormatError("checkpoint: truncated parameter payload");
  c.parameters.resize(count);
  for (auto& v : c.parameters) v = std::bit_cast<float>(r.u32());
  if (r.position() != body) throw FormatError("checkpoint: trailing bytes before checksum");
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::unique_ptr<TrainableField<float>> instantiate(const Checkpoint& ckpt) {
  std::unique_ptr<TrainableField<float>> field;
  try {
    if (ckpt.backend == Backend::Mlp)
      field = std::make_unique<MlpField<float>>(mlp_field_config_from_json(ckpt.field_config));
    else
      field = std::make_unique<VoxelField<float>>(voxel_field_config_from_json(ckpt.field_config));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad field config: ") + e.what());
  }
  auto params = field->parameters();
  if (params.size() != ckpt.parameters.size())
    throw FormatError("checkpoint: parameter count " + std::to_string(ckpt.parameters.size()) +
                      " does not match the field (" + std::to_string(params.size()) + ")");
  std::copy(ckpt.parameters.begin(), ckpt.parameters.end(), params.begin());
  return field;
}

}  // namespace rf
