#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace xcsr {

// Little-endian integer packing. All wire and file integers go through these
// so the byte layout does not depend on the host.

inline void put_u64le(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint64_t get_u64le(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

inline void put_u32le(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint32_t get_u32le(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

inline void put_u16le(std::uint8_t* out, std::uint16_t v) {
  out[0] = static_cast<std::uint8_t>(v);
  out[1] = static_cast<std::uint8_t>(v >> 8);
}

inline std::uint16_t get_u16le(const std::uint8_t* in) {
  return static_cast<std::uint16_t>(in[0] | (in[1] << 8));
}

inline void append_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  std::uint8_t buf[8];
  put_u64le(buf, v);
  out.insert(out.end(), buf, buf + 8);
}

}  // namespace xcsr
