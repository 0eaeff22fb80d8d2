#include "tubekit/tvol.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>
#include <system_error>
#include <unistd.h>

namespace tubekit {
namespace {

constexpr std::string_view kMagic = "TVOL1";

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[offset + b]) << (8 * b);
  return v;
}

float get_f32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return std::bit_cast<float>(get_u32(bytes, offset));
}

std::vector<std::uint8_t> encode_header(TvolType type, const Dims& d, const Spacing& s,
                                        std::size_t payload_bytes) {
  std::vector<std::uint8_t> out;
  out.reserve(kTvolHeaderSize + payload_bytes);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(static_cast<std::uint8_t>(type));
  put_u32(out, static_cast<std::uint32_t>(d.nx));
  put_u32(out, static_cast<std::uint32_t>(d.ny));
  put_u32(out, static_cast<std::uint32_t>(d.nz));
  put_f32(out, s.x);
  put_f32(out, s.y);
  put_f32(out, s.z);
  return out;
}

std::size_t element_size(TvolType t) { return t == TvolType::f32 ? 4 : 1; }

void check_payload(const TvolHeader& h, std::span<const std::uint8_t> bytes) {
  const std::size_t expected = h.dims.count() * element_size(h.type);
  const std::size_t actual = bytes.size() - kTvolHeaderSize;
  if (actual != expected) {
    throw IoError("payload", "length mismatch: header " + to_string(h.dims) + " needs " +
                                 std::to_string(expected) + " payload bytes, file has " +
                                 std::to_string(actual));
  }
}

}  // namespace

std::vector<std::uint8_t> encode_tvol(const Volume3& vol) {
  vol.validate();
  auto out = encode_header(TvolType::f32, vol.dims(), vol.spacing(), vol.size() * 4);
  for (float v : vol.data()) put_f32(out, v);
  return out;
}

std::vector<std::uint8_t> encode_tvol(const Mask3& mask) {
  mask.validate();
  auto out = encode_header(TvolType::u8, mask.dims(), mask.spacing(), mask.size());
  out.insert(out.end(), mask.data().begin(), mask.data().end());
  return out;
}

TvolHeader decode_tvol_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw IoError("magic", "bad magic");
  }
  if (bytes.size() < kTvolHeaderSize) throw IoError("header", "truncated header");
  TvolHeader h;
  const std::uint8_t code = bytes[5];
  if (code > 1) throw IoError("dtype", "bad dtype code " + std::to_string(code));
  h.type = static_cast<TvolType>(code);
  const std::uint32_t nx = get_u32(bytes, 6), ny = get_u32(bytes, 10), nz = get_u32(bytes, 14);
  constexpr std::uint32_t kMaxDim = 1u << 20;
  if (nx == 0 || ny == 0 || nz == 0 || nx > kMaxDim || ny > kMaxDim || nz > kMaxDim) {
    throw IoError("dims", "bad dims " + std::to_string(nx) + "x" + std::to_string(ny) + "x" +
                              std::to_string(nz));
  }
  h.dims = {static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz)};
  h.spacing = {get_f32(bytes, 18), get_f32(bytes, 22), get_f32(bytes, 26)};
  for (float s : {h.spacing.x, h.spacing.y, h.spacing.z}) {
    if (!std::isfinite(s) || !(s > 0.0f)) throw IoError("spacing", "spacing must be positive and finite");
  }
  return h;
}

Volume3 decode_tvol_volume(std::span<const std::uint8_t> bytes) {
  const TvolHeader h = decode_tvol_header(bytes);
  check_payload(h, bytes);
  std::vector<float> data(h.dims.count());
  if (h.type == TvolType::f32) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = get_f32(bytes, kTvolHeaderSize + 4 * i);
      if (!std::isfinite(data[i])) {
        throw IoError("payload", "non-finite data at linear index " + std::to_string(i));
      }
    }
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::uint8_t v = bytes[kTvolHeaderSize + i];
      if (v > 1) throw IoError("payload", "mask value " + std::to_string(v) + " is not 0/1");
      data[i] = v;
    }
  }
  return Volume3(h.dims, h.spacing, std::move(data));
}

Mask3 decode_tvol_mask(std::span<const std::uint8_t> bytes) {
  const TvolHeader h = decode_tvol_header(bytes);
  check_payload(h, bytes);
  std::vector<std::uint8_t> data(h.dims.count());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (h.type == TvolType::u8) {
      data[i] = bytes[kTvolHeaderSize + i];
      if (data[i] > 1) {
        throw IoError("payload", "mask value " + std::to_string(data[i]) + " is not 0/1");
      }
    } else {
      const float v = get_f32(bytes, kTvolHeaderSize + 4 * i);
      if (v != 0.0f && v != 1.0f) {
        throw IoError("payload", "f32 payload is not a 0/1 mask at linear index " + std::to_string(i));
      }
      data[i] = v == 1.0f ? 1 : 0;
    }
  }
  return Mask3(h.dims, h.spacing, std::move(data));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("path", "cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("path", "cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("path", "short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("path", "cannot rename onto '" + path.string() + "'");
  }
}

void save_tvol(const Volume3& vol, const std::filesystem::path& path) {
  write_file_atomic(path, encode_tvol(vol));
}

void save_tvol(const Mask3& mask, const std::filesystem::path& path) {
  write_file_atomic(path, encode_tvol(mask));
}

Volume3 load_tvol(const std::filesystem::path& path) { return decode_tvol_volume(read_file(path)); }

Mask3 load_tvol_mask(const std::filesystem::path& path) { return decode_tvol_mask(read_file(path)); }

}  // namespace tubekit
