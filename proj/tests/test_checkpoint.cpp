#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>

#include "oobnet/checkpoint.hpp"
#include "oobnet/error.hpp"
#include "test_support.hpp"

using namespace oobnet;
using oobnet::testing::TempDir;

namespace {

ErrorCode decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::kInvalidArgument;
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (std::uint32_t(b[at + 3]) << 24);
}

void write_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

struct Fixture {
  ModelConfig config = ModelConfig::tiny();
  OoBNetParams params;
  std::vector<std::uint8_t> bytes;

  Fixture() {
    Rng rng(4);
    params = init_params<float>(config, rng);
    bytes = encode_checkpoint(params, config);
  }

  std::size_t count_offset() const { return 12 + read_u32(bytes, 8); }
};

}  // namespace

TEST(Checkpoint, HeaderLayout) {
  Fixture f;
  ASSERT_GE(f.bytes.size(), 16u);
  EXPECT_EQ(std::memcmp(f.bytes.data(), "OOBN", 4), 0);
  EXPECT_EQ(read_u32(f.bytes, 4), kCheckpointVersion);
  const std::string json(f.bytes.begin() + 12, f.bytes.begin() + f.count_offset());
  EXPECT_EQ(ModelConfig::from_json(nlohmann::json::parse(json)), f.config);
  EXPECT_EQ(read_u32(f.bytes, f.count_offset()), f.params.size());
}

TEST(Checkpoint, FirstTensorRecordIsLexicographicallyFirst) {
  Fixture f;
  std::size_t at = f.count_offset() + 4;
  const std::size_t name_len = f.bytes[at] | (f.bytes[at + 1] << 8);
  const std::string name(f.bytes.begin() + at + 2, f.bytes.begin() + at + 2 + name_len);
  EXPECT_EQ(name, f.params.begin()->first);
  at += 2 + name_len;
  EXPECT_EQ(f.bytes[at], f.params.begin()->second.rank());
}

TEST(Checkpoint, RoundTripPreservesEveryScalar) {
  Fixture f;
  const Checkpoint back = decode_checkpoint(f.bytes);
  EXPECT_EQ(back.config, f.config);
  EXPECT_EQ(back.params, f.params);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  Fixture f;
  TempDir dir("ckpt");
  const auto a = dir.path() / "a.oobn";
  const auto b = dir.path() / "b.oobn";
  save_checkpoint(f.params, f.config, a);
  const Checkpoint loaded = load_checkpoint(a);
  save_checkpoint(loaded.params, loaded.config, b);
  EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
  EXPECT_EQ(read_file_bytes(a), f.bytes);
}

TEST(Checkpoint, BadMagic) {
  Fixture f;
  f.bytes[0] = 'X';
  EXPECT_EQ(decode_error(f.bytes), ErrorCode::kBadMagic);
}

TEST(Checkpoint, VersionMismatch) {
  Fixture f;
  write_u32(f.bytes, 4, 2);
  EXPECT_EQ(decode_error(f.bytes), ErrorCode::kVersionMismatch);
}

TEST(Checkpoint, CountLargerThanBodyIsTruncation) {
  Fixture f;
  write_u32(f.bytes, f.count_offset(), static_cast<std::uint32_t>(f.params.size() + 1));
  EXPECT_EQ(decode_error(f.bytes), ErrorCode::kTruncated);
}

TEST(Checkpoint, EveryShortPrefixIsRejected) {
  Fixture f;
  for (std::size_t n = 0; n < f.bytes.size(); n += 1 + n / 7) {
    const std::span<const std::uint8_t> prefix(f.bytes.data(), n);
    const ErrorCode code = decode_error(prefix);
    EXPECT_TRUE(code == ErrorCode::kTruncated || code == ErrorCode::kBadMagic) << n;
  }
}

TEST(Checkpoint, TrailingBytes) {
  Fixture f;
  f.bytes.push_back(0);
  EXPECT_EQ(decode_error(f.bytes), ErrorCode::kTrailingData);
}

TEST(Checkpoint, EncodeRefusesParamsThatDisagreeWithConfig) {
  Fixture f;
  auto code = [&](const OoBNetParams& p) {
    try {
      encode_checkpoint(p, f.config);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  OoBNetParams wrong = f.params;
  wrong.at("fc.weight") = TensorF({1, 9});
  EXPECT_EQ(code(wrong), ErrorCode::kConfigMismatch);
  OoBNetParams missing = f.params;
  missing.erase("fc.bias");
  EXPECT_EQ(code(missing), ErrorCode::kConfigMismatch);
  OoBNetParams extra = f.params;
  extra.emplace("zzz.extra", TensorF({2}));
  EXPECT_EQ(code(extra), ErrorCode::kConfigMismatch);
}

TEST(Checkpoint, DecodedShapeInconsistentWithConfig) {
  Fixture f;
  // fc.weight is [1, 8]; rewrite its dims to [2, 4] so the data length
  // still lines up and only the shape disagrees.
  const std::string name = "fc.weight";
  const auto it = std::search(f.bytes.begin(), f.bytes.end(), name.begin(), name.end());
  ASSERT_NE(it, f.bytes.end());
  const std::size_t at = static_cast<std::size_t>(it - f.bytes.begin()) + name.size();
  ASSERT_EQ(f.bytes[at], 2);
  ASSERT_EQ(read_u32(f.bytes, at + 1), 1u);
  ASSERT_EQ(read_u32(f.bytes, at + 5), 8u);
  write_u32(f.bytes, at + 1, 2);
  write_u32(f.bytes, at + 5, 4);
  EXPECT_EQ(decode_error(f.bytes), ErrorCode::kConfigMismatch);
}

TEST(Checkpoint, MissingFile) {
  try {
    load_checkpoint("/nonexistent/dir/model.oobn");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/model.oobn"), std::string::npos);
  }
}
