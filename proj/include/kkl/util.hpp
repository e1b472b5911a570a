#ifndef KKL_UTIL_HPP_
#define KKL_UTIL_HPP_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace kkl {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// Exact text form of a double (C99 hex float).
inline std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

/// Shortest round-trippable decimal-ish form used in labels.
inline std::string short_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string hex_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace kkl

#endif  // KKL_UTIL_HPP_
