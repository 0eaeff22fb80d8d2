#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tubekit/volume.hpp"

namespace tubekit {

// .tvol layout, little-endian, no padding:
//   "TVOL1" | dtype u8 (0 = f32 volume, 1 = u8 mask) | nx ny nz u32 |
//   sx sy sz f32 | nx*ny*nz payload elements, x-fastest.
enum class TvolType : std::uint8_t { f32 = 0, u8 = 1 };

inline constexpr std::size_t kTvolHeaderSize = 5 + 1 + 3 * 4 + 3 * 4;

struct TvolHeader {
  TvolType type = TvolType::f32;
  Dims dims{};
  Spacing spacing{};
};

std::vector<std::uint8_t> encode_tvol(const Volume3& vol);
std::vector<std::uint8_t> encode_tvol(const Mask3& mask);

TvolHeader decode_tvol_header(std::span<const std::uint8_t> bytes);
// Mask payloads are promoted to 0.0f / 1.0f.
Volume3 decode_tvol_volume(std::span<const std::uint8_t> bytes);
// f32 payloads are accepted only when every value is exactly 0 or 1.
Mask3 decode_tvol_mask(std::span<const std::uint8_t> bytes);

void save_tvol(const Volume3& vol, const std::filesystem::path& path);
void save_tvol(const Mask3& mask, const std::filesystem::path& path);
Volume3 load_tvol(const std::filesystem::path& path);
Mask3 load_tvol_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tubekit
