#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace bizcorpus {

/// 64-bit FNV-1a. Stable across runs, builds and platforms; not cryptographic.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t state = 0xcbf29ce484222325ULL) noexcept {
  for (char c : bytes) {
    state ^= static_cast<unsigned char>(c);
    state *= 0x100000001b3ULL;
  }
  return state;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named random stream derived from the run seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept {
  return splitmix64(seed ^ fnv1a64(stream));
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace bizcorpus
