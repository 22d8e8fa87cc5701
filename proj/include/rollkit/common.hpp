#pragma once

#include <charconv>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace rollkit {

// Error taxonomy mirrored by the CLI exit codes:
//   ValidationError -> 1, IoError -> 2, ParameterError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input data that violates a structural invariant (bad record, bad mixture).
struct ValidationError : Error {
  using Error::Error;
};

// Filesystem / stream failures.
struct IoError : Error {
  using Error::Error;
};

// A call with arguments outside an operation's domain.
struct ParameterError : Error {
  using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Margin sentinel for positions whose top-k list has a single entry: a
// position with no recorded alternative is not a fork, and this value drives
// the inverse-margin anchor weight toward zero.
inline constexpr double kLargeMargin = 1e6;

// Shortest round-trippable decimal form; keeps CSV output byte-stable.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed,
                           precision);
  return std::string(buf, res.ptr);
}

}  // namespace rollkit
