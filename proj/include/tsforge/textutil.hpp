#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace tsforge {

// Fixed-point formatting with round-half-away-from-zero, e.g.
// format_fixed(-0.005, 2) == "-0.01".
inline std::string format_fixed(double value, int decimals) {
  double scale = 1.0;
  for (int i = 0; i < decimals; ++i) scale *= 10.0;
  const double scaled = value * scale;
  long long units = std::llround(std::fabs(scaled));  // half away from zero
  const bool negative = std::signbit(scaled) && units != 0;
  std::string digits = std::to_string(units);
  std::string out;
  if (decimals == 0) {
    out = digits;
  } else {
    if (digits.size() <= static_cast<std::size_t>(decimals)) {
      digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(),
                    '0');
    }
    out = digits.substr(0, digits.size() - decimals) + "." +
          digits.substr(digits.size() - decimals);
  }
  return negative ? "-" + out : out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// FNV-1a 64-bit, used for cache keys and manifest digests.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace tsforge
