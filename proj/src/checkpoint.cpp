#include "oobnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace oobnet {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint16_t u16() {
    auto p = need(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    auto p = need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    auto p = need(n);
    return std::string(reinterpret_cast<const char*>(p.data()), n);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> need(std::size_t n) {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncated,
                  "checkpoint ends at byte " + std::to_string(bytes_.size()) +
                      ", needed " + std::to_string(n) + " more at offset " +
                      std::to_string(pos_));
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const OoBNetParams& params,
                                            const ModelConfig& config) {
  const auto expected = param_shapes(config);
  if (expected.size() != params.size()) {
    throw Error(ErrorCode::kConfigMismatch,
                "params hold " + std::to_string(params.size()) +
                    " tensors, config implies " +
                    std::to_string(expected.size()));
  }
  Writer w;
  w.bytes("OOBN");
  w.u32(kCheckpointVersion);
  const std::string blob = config.to_json().dump();
  w.u32(static_cast<std::uint32_t>(blob.size()));
  w.bytes(blob);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    auto it = expected.find(name);
    if (it == expected.end() || it->second != t.shape()) {
      throw Error(ErrorCode::kConfigMismatch,
                  "parameter '" + name + "' shape " + shape_string(t.shape()) +
                      " does not match config");
    }
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data()) w.f32(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "OOBN", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "checkpoint does not start with OOBN");
  }
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint version " + std::to_string(version) +
                    ", supported " + std::to_string(kCheckpointVersion));
  }
  const std::uint32_t blob_len = r.u32();
  const std::string blob = r.str(blob_len);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigMismatch,
                std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  ck.config = ModelConfig::from_json(j);
  std::map<std::string, Shape> expected;
  try {
    expected = param_shapes(ck.config);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigMismatch,
                std::string("checkpoint config invalid: ") + e.what());
  }

  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    const std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    auto it = expected.find(name);
    if (it == expected.end()) {
      throw Error(ErrorCode::kConfigMismatch,
                  "unexpected tensor '" + name + "' for this config");
    }
    if (it->second != shape) {
      throw Error(ErrorCode::kConfigMismatch,
                  "tensor '" + name + "' has shape " + shape_string(shape) +
                      ", config implies " + shape_string(it->second));
    }
    if (ck.params.count(name)) {
      throw Error(ErrorCode::kConfigMismatch, "duplicate tensor '" + name + "'");
    }
    std::vector<float> data(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : data) v = r.f32();
    ck.params.emplace(std::move(name), TensorF(std::move(shape), std::move(data)));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kTrailingData,
                std::to_string(r.remaining()) + " bytes after last tensor");
  }
  if (ck.params.size() != expected.size()) {
    throw Error(ErrorCode::kConfigMismatch,
                "checkpoint holds " + std::to_string(ck.params.size()) +
                    " tensors, config implies " +
                    std::to_string(expected.size()));
  }
  return ck;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

void save_checkpoint(const OoBNetParams& params, const ModelConfig& config,
                     const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(params, config));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace oobnet
