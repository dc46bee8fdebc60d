#pragma once

#include <charconv>
#include <string>

namespace testroll {

/// Shortest round-trip decimal representation; identical bytes for identical
/// doubles, which keeps emitted files reproducible.
inline std::string double_to_string(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void append_double(std::string& out, double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, res.ptr);
}

}  // namespace testroll
