#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

namespace hnsynth::detail {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xff));
    u = static_cast<U>(u >> 8);
  }
}

inline void put_f32_le(std::string& out, float value) { put_le(out, std::bit_cast<std::uint32_t>(value)); }

template <typename T>
T get_le(const unsigned char* p) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | p[i]);
  return static_cast<T>(u);
}

inline float get_f32_le(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

}  // namespace hnsynth::detail
