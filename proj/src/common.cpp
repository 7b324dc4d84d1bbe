#include "stabfem/common.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numbers>

namespace stabfem {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Basic: return "basic";
    case Family::Bernstein: return "bernstein";
    case Family::Cubature: return "cubature";
  }
  return "?";
}

std::string to_string(Stabilization s) {
  switch (s) {
    case Stabilization::None: return "none";
    case Stabilization::SUPG: return "supg";
    case Stabilization::CIP: return "cip";
    case Stabilization::OSS: return "oss";
  }
  return "?";
}

std::string to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::RK: return "rk";
    case SchemeKind::SSPRK: return "ssprk";
    case SchemeKind::DeC: return "dec";
  }
  return "?";
}

std::string to_string(Pattern p) { return p == Pattern::X ? "X" : "T"; }

Family parse_family(std::string_view s) {
  const std::string v = lower(s);
  if (v == "basic" || v == "lagrange") return Family::Basic;
  if (v == "bernstein" || v == "bezier") return Family::Bernstein;
  if (v == "cubature" || v == "cohen") return Family::Cubature;
  throw InvalidArgument("unknown element family '" + std::string(s) +
                        "' (allowed: basic, bernstein, cubature)");
}

Stabilization parse_stabilization(std::string_view s) {
  const std::string v = lower(s);
  if (v == "none") return Stabilization::None;
  if (v == "supg") return Stabilization::SUPG;
  if (v == "cip") return Stabilization::CIP;
  if (v == "oss") return Stabilization::OSS;
  throw InvalidArgument("unknown stabilization '" + std::string(s) +
                        "' (allowed: none, supg, cip, oss)");
}

SchemeKind parse_scheme(std::string_view s) {
  const std::string v = lower(s);
  if (v == "rk") return SchemeKind::RK;
  if (v == "ssprk") return SchemeKind::SSPRK;
  if (v == "dec") return SchemeKind::DeC;
  throw InvalidArgument("unknown time scheme '" + std::string(s) +
                        "' (allowed: rk, ssprk, dec)");
}

Pattern parse_pattern(std::string_view s) {
  const std::string v = lower(s);
  if (v == "x") return Pattern::X;
  if (v == "t") return Pattern::T;
  throw InvalidArgument("unknown mesh pattern '" + std::string(s) + "' (allowed: X, T)");
}

double parse_angle(std::string_view s) {
  std::string v(s);
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
  double scale = 1.0;
  if (v.size() >= 2 && lower(v.substr(v.size() - 2)) == "pi") {
    scale = std::numbers::pi;
    v.resize(v.size() - 2);
    if (v.empty() || v == "+") return scale;
    if (v == "-") return -scale;
  }
  double value = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw InvalidArgument("cannot parse angle '" + std::string(s) + "'");
  return value * scale;
}

}  // namespace stabfem
