#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace dpaa {

// Little-endian binary helpers shared by the checkpoint and IIW cache formats.

inline void write_u32le(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
               static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

inline void write_u64le(std::ostream& out, std::uint64_t v) {
  write_u32le(out, static_cast<std::uint32_t>(v));
  write_u32le(out, static_cast<std::uint32_t>(v >> 32));
}

inline void write_f32le(std::ostream& out, float v) {
  write_u32le(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_f64le(std::ostream& out, double v) {
  write_u64le(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t read_u32le(std::istream& in) {
  unsigned char b[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64le(std::istream& in) {
  const std::uint64_t lo = read_u32le(in);
  const std::uint64_t hi = read_u32le(in);
  return lo | (hi << 32);
}

inline float read_f32le(std::istream& in) {
  return std::bit_cast<float>(read_u32le(in));
}

inline double read_f64le(std::istream& in) {
  return std::bit_cast<double>(read_u64le(in));
}

}  // namespace dpaa
