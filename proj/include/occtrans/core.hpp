#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

namespace occtrans {

// Thrown on contract violations (shape mismatch, bad formats, bad arguments).
// The CLI maps these to exit codes; tests assert on them.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (int e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

namespace detail {
inline void msg_append(std::string& m, const std::string& s) { m += s; }
inline void msg_append(std::string& m, const char* s) { m += s; }
inline void msg_append(std::string& m, char c) { m += c; }
template <class T>
  requires std::is_arithmetic_v<T>
inline void msg_append(std::string& m, T v) { m += std::to_string(v); }
}  // namespace detail

template <class... Args>
[[noreturn]] inline void fail(const Args&... parts) {
  std::string msg;
  (detail::msg_append(msg, parts), ...);
  throw Error(msg);
}

template <class... Args>
inline void require(bool cond, const Args&... parts) {
  if (!cond) fail(parts...);
}

}  // namespace occtrans
