#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "maskgen/errors.hpp"

// Little-endian primitives shared by the binary file formats.
namespace maskgen::detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof v);
  }
  return v;
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  write_u32(out, bits);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, void* dst, std::size_t n, const std::string& what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw TruncatedFileError(what + ": file is truncated");
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  read_exact(in, &v, sizeof v, what);
  return to_little(v);
}

inline float read_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(read_u32(in, what));
}

inline std::string read_string(std::istream& in, const std::string& what,
                               std::uint32_t max_len = 1u << 26) {
  const std::uint32_t n = read_u32(in, what);
  if (n > max_len) throw FormatError(what + ": implausible string length");
  std::string s(n, '\0');
  read_exact(in, s.data(), n, what);
  return s;
}

}  // namespace maskgen::detail
