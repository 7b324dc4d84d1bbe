#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stabfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Integer translation of a periodic unit, in units of the period.
using Shift = std::array<int, 2>;

enum class Family { Basic, Bernstein, Cubature };
enum class Stabilization { None, SUPG, CIP, OSS };
enum class SchemeKind { RK, SSPRK, DeC };
enum class Pattern { X, T };

/// Bad argument or unsupported combination (CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Blow-up, empty stable set, positivity loss (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File access or malformed input (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed mesh or config text; carries the offending line number.
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, int line)
      : IoError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

std::string to_string(Family f);
std::string to_string(Stabilization s);
std::string to_string(SchemeKind s);
std::string to_string(Pattern p);

Family parse_family(std::string_view s);
Stabilization parse_stabilization(std::string_view s);
SchemeKind parse_scheme(std::string_view s);
Pattern parse_pattern(std::string_view s);

/// Parses a real number, accepting a trailing `pi` as a multiple of pi.
double parse_angle(std::string_view s);

}  // namespace stabfem
