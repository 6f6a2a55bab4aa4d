#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "oobnet/model.hpp"

// Binary checkpoint, little-endian:
//   "OOBN" | u32 version (1) | u32 len + UTF-8 JSON config | u32 tensor count
//   then per tensor in lexicographic name order:
//   u16 name len | name | u8 rank | u32 dims[rank] | f32 data
namespace oobnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  OoBNetParams params;
};

std::vector<std::uint8_t> encode_checkpoint(const OoBNetParams& params,
                                            const ModelConfig& config);

// Validates magic, version, lengths and that every tensor matches the shape
// implied by the embedded config.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const OoBNetParams& params, const ModelConfig& config,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace oobnet
