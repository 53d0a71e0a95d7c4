#pragma once

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "costacq/xpt.hpp"

namespace oracle {

// Exact big-integer conversion: value = mantissa * 2^(4*(exp-64) - 56),
// rounded to 53 significant bits with ties to even.
inline std::variant<double, costacq::xpt::Missing> reference_ibm(const std::array<std::uint8_t, 8>& b) {
  using boost::multiprecision::cpp_int;
  bool rest_zero = true;
  for (int i = 1; i < 8; ++i) rest_zero = rest_zero && b[i] == 0;
  if (rest_zero && (b[0] == '.' || b[0] == '_' || (b[0] >= 'A' && b[0] <= 'Z'))) return costacq::xpt::Missing{static_cast<char>(b[0])};
  cpp_int mantissa = 0;
  for (int i = 1; i < 8; ++i) mantissa = (mantissa << 8) | b[i];
  if (mantissa == 0) return 0.0;
  int exp2 = 4 * ((b[0] & 0x7f) - 64) - 56;
  const auto bits = static_cast<int>(msb(mantissa)) + 1;
  if (bits > 53) {
    const int drop = bits - 53;
    const cpp_int half = cpp_int(1) << (drop - 1);
    const cpp_int rem = mantissa & ((cpp_int(1) << drop) - 1);
    mantissa >>= drop;
    exp2 += drop;
    if (rem > half || (rem == half && (mantissa & 1) != 0)) ++mantissa;
  }
  const double v = std::ldexp(mantissa.convert_to<double>(), exp2);
  return (b[0] & 0x80) ? -v : v;
}

// First difference between a parsed document and its JSON description, or
// an empty string when they agree.
inline std::string document_mismatch(const costacq::xpt::Document& doc, const nlohmann::json& want) {
  using namespace costacq::xpt;
  if (doc.members.size() != want["members"].size()) return "member count";
  for (std::size_t k = 0; k < doc.members.size(); ++k) {
    const auto& m = doc.members[k];
    const auto& w = want["members"][k];
    const std::string where = "member " + m.name;
    if (m.name != w["name"].get<std::string>()) return where + ": name";
    if (m.variables.size() != w["variables"].size()) return where + ": variable count";
    std::size_t position = 0;
    for (std::size_t c = 0; c < m.variables.size(); ++c) {
      const auto& v = m.variables[c];
      const auto& wv = w["variables"][c];
      if (v.name != wv["name"].get<std::string>()) return where + ": variable " + std::to_string(c) + " name";
      if ((v.type == VarType::numeric ? "numeric" : "character") != wv["type"].get<std::string>()) return where + ": " + v.name + " type";
      if (v.length != wv["length"].get<std::size_t>()) return where + ": " + v.name + " length";
      if (v.position != position) return where + ": " + v.name + " position";
      position += v.length;
    }
    if (m.rows.size() != w["rows"].size()) return where + ": row count";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      for (std::size_t c = 0; c < m.variables.size(); ++c) {
        const auto& cell = m.rows[r][c];
        const auto& wc = w["rows"][r][c];
        const std::string at = where + ": " + m.variables[c].name + " row " + std::to_string(r);
        if (m.variables[c].type == VarType::character) {
          const auto* s = std::get_if<std::string>(&cell);
          if (!s || *s != wc.get<std::string>()) return at;
        } else if (wc.is_string()) {
          const auto* miss = std::get_if<Missing>(&cell);
          if (!miss || miss->tag != wc.get<std::string>()[0]) return at;
        } else {
          const auto* d = std::get_if<double>(&cell);
          if (!d || *d != wc.get<double>()) return at;
        }
      }
    }
  }
  return "";
}

}  // namespace oracle
