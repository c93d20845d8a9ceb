#pragma once

// Token-level helpers for the text model format.

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "attrib/error.h"
#include "attrib/text.h"

namespace attrib::serial {

inline std::string ReadToken(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw ValidationError("model file: unexpected end of input");
  return token;
}

inline void Expect(std::istream& in, std::string_view keyword) {
  const std::string token = ReadToken(in);
  if (token != keyword) {
    throw ValidationError("model file: expected '" + std::string(keyword) +
                          "', found '" + token + "'");
  }
}

inline double ReadNumber(std::istream& in) {
  const std::string token = ReadToken(in);
  const auto value = ParseNumber(token);
  if (!value) {
    throw ValidationError("model file: bad number '" + token + "'");
  }
  return *value;
}

inline std::size_t ReadCount(std::istream& in) {
  const double v = ReadNumber(in);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ValidationError("model file: bad count");
  }
  return static_cast<std::size_t>(v);
}

// " n v1 v2 ... vn\n"
inline void WriteNumbers(std::ostream& out, std::span<const double> values) {
  out << ' ' << values.size();
  for (double v : values) out << ' ' << FormatNumber(v);
  out << '\n';
}

inline std::vector<double> ReadNumbers(std::istream& in) {
  const std::size_t n = ReadCount(in);
  std::vector<double> values(n);
  for (auto& v : values) v = ReadNumber(in);
  return values;
}

inline void WriteKeyed(std::ostream& out, std::string_view key,
                       std::span<const double> values) {
  out << key;
  WriteNumbers(out, values);
}

inline std::vector<double> ReadKeyed(std::istream& in, std::string_view key) {
  Expect(in, key);
  return ReadNumbers(in);
}

}  // namespace attrib::serial
