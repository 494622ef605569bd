#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "spc/cli.hpp"

namespace spc::cli {

std::string shortest(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), end);
}

std::string table_scientific(double value) {
  if (!std::isfinite(value)) return shortest(value);
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.5E", value);
  const std::string s(buf.data());
  const auto e = s.find('E');
  const std::string mantissa = s.substr(0, e);
  const int exponent = std::atoi(s.c_str() + e + 1);
  if (exponent > 0) return mantissa + "E+" + std::to_string(exponent);
  return mantissa + "E-" + std::to_string(-exponent);
}

}  // namespace spc::cli
