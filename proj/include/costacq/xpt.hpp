#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "costacq/error.hpp"
#include "costacq/variable_table.hpp"

// SAS Transport (XPORT) version 5 reader.
namespace costacq::xpt {

inline constexpr std::size_t kRecord = 80;
inline constexpr std::string_view kLibraryMagic = "HEADER RECORD*******LIBRARY HEADER RECORD!!!!!!!";
inline constexpr std::string_view kMemberMagic = "HEADER RECORD*******MEMBER  HEADER RECORD!!!!!!!";
inline constexpr std::string_view kDescriptorMagic = "HEADER RECORD*******DSCRPTR HEADER RECORD!!!!!!!";
inline constexpr std::string_view kNamestrMagic = "HEADER RECORD*******NAMESTR HEADER RECORD!!!!!!!";
inline constexpr std::string_view kObsMagic = "HEADER RECORD*******OBS     HEADER RECORD!!!!!!!";
inline constexpr std::string_view kV8LibraryMagic = "HEADER RECORD*******LIBV8   HEADER RECORD!!!!!!!";

enum class VarType { numeric, character };

struct Variable {
  std::string name;
  VarType type = VarType::numeric;
  std::size_t length = 8;
  std::size_t position = 0;
  std::string label;

  friend bool operator==(const Variable&, const Variable&) = default;
};

// A numeric missing value remembers its tag: '.', 'A'..'Z' or '_'.
struct Missing {
  char tag = '.';
  friend bool operator==(const Missing&, const Missing&) = default;
};

using Value = std::variant<double, Missing, std::string>;

struct Member {
  std::string name;
  std::string label;
  std::vector<Variable> variables;
  std::vector<std::vector<Value>> rows;

  std::size_t row_width() const {
    std::size_t w = 0;
    for (const auto& v : variables) w += v.length;
    return w;
  }
};

struct Document {
  std::vector<Member> members;
};

// IBM hexadecimal float (big-endian, 2..8 bytes, zero-padded on the right)
// to double, or the missing-value tag.
inline std::variant<double, Missing> ibm_to_ieee(std::span<const std::uint8_t> bytes) {
  std::uint8_t b[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const auto n = std::min<std::size_t>(bytes.size(), 8);
  std::memcpy(b, bytes.data(), n);
  bool rest_zero = true;
  for (int i = 1; i < 8; ++i) rest_zero = rest_zero && b[i] == 0;
  if (rest_zero && (b[0] == '.' || b[0] == '_' || (b[0] >= 'A' && b[0] <= 'Z'))) return Missing{static_cast<char>(b[0])};
  std::uint64_t mantissa = 0;
  for (int i = 1; i < 8; ++i) mantissa = (mantissa << 8) | b[i];
  if (mantissa == 0) return 0.0;
  const int exponent = (b[0] & 0x7f) - 64;
  // mantissa / 2^56 * 16^exponent; one rounding at the conversion to double,
  // and the scaling by a power of two is exact across the whole IBM range.
  const double v = std::ldexp(static_cast<double>(mantissa), 4 * exponent - 56);
  return (b[0] & 0x80) ? -v : v;
}

namespace detail {

inline std::string offset_text(std::size_t offset) { return " at byte offset " + std::to_string(offset); }

inline std::string_view view(std::span<const std::uint8_t> data, std::size_t offset, std::size_t n) {
  return {reinterpret_cast<const char*>(data.data()) + offset, n};
}

inline std::string trimmed(std::string_view s) {
  auto end = s.find_last_not_of(' ');
  if (end == std::string_view::npos) return "";
  auto out = std::string(s.substr(0, end + 1));
  while (!out.empty() && out.back() == '\0') out.pop_back();
  return out;
}

inline unsigned be16(std::span<const std::uint8_t> d, std::size_t o) { return (unsigned(d[o]) << 8) | d[o + 1]; }

inline std::uint32_t be32(std::span<const std::uint8_t> d, std::size_t o) {
  return (std::uint32_t(d[o]) << 24) | (std::uint32_t(d[o + 1]) << 16) | (std::uint32_t(d[o + 2]) << 8) | d[o + 3];
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return offset_; }
  bool at_end() const { return offset_ >= data_.size(); }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (offset_ + n > data_.size()) {
      fail(ErrorCode::truncated_record, std::string("truncated ") + what + offset_text(offset_));
    }
    auto s = data_.subspan(offset_, n);
    offset_ += n;
    return s;
  }

  void expect(std::string_view magic, const char* what) {
    const auto at = offset_;
    const auto rec = take(kRecord, what);
    if (view(rec, 0, magic.size()) != magic) {
      fail(ErrorCode::bad_magic, std::string("expected ") + what + offset_text(at));
    }
  }

  bool next_is(std::string_view magic) const {
    return offset_ + kRecord <= data_.size() && view(data_, offset_, magic.size()) == magic;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t offset_ = 0;
};

inline Variable parse_namestr(std::span<const std::uint8_t> n, std::size_t offset) {
  Variable v;
  const auto type = be16(n, 0);
  if (type != 1 && type != 2) fail(ErrorCode::malformed_namestr, "variable type " + std::to_string(type) + offset_text(offset));
  v.type = type == 1 ? VarType::numeric : VarType::character;
  v.length = be16(n, 4);
  v.name = trimmed(view(n, 8, 8));
  v.label = trimmed(view(n, 16, 40));
  v.position = be32(n, 84);
  if (v.name.empty()) fail(ErrorCode::malformed_namestr, "empty variable name" + offset_text(offset));
  if (v.length == 0 || (v.type == VarType::numeric && (v.length < 2 || v.length > 8))) {
    fail(ErrorCode::malformed_namestr, "variable " + v.name + " has length " + std::to_string(v.length) + offset_text(offset));
  }
  return v;
}

}  // namespace detail

inline Document parse_document(std::span<const std::uint8_t> data) {
  using detail::Reader;
  if (data.empty()) fail(ErrorCode::truncated_record, "empty input" + detail::offset_text(0));
  if (data.size() % kRecord != 0) {
    fail(ErrorCode::truncated_record, "input is not a whole number of 80-byte records" +
                                          detail::offset_text(data.size() - data.size() % kRecord));
  }
  if (data.size() >= kV8LibraryMagic.size() && detail::view(data, 0, kV8LibraryMagic.size()) == kV8LibraryMagic) {
    fail(ErrorCode::unsupported_version, "XPORT version 8/9 files are not supported");
  }
  Reader r(data);
  r.expect(kLibraryMagic, "library header");
  r.take(2 * kRecord, "library header");
  Document doc;
  while (!r.at_end()) {
    // tolerate blank padding after the final member
    const auto rest = data.subspan(r.offset());
    if (std::all_of(rest.begin(), rest.end(), [](std::uint8_t c) { return c == ' '; })) break;
    const auto member_at = r.offset();
    r.expect(kMemberMagic, "member header");
    const auto member_header = detail::view(data, member_at, kRecord);
    const std::string namestr_size(member_header.substr(74, 4));
    const std::size_t namestr_len = namestr_size == "0136" ? 136 : 140;
    if (namestr_size != "0140" && namestr_size != "0136") {
      fail(ErrorCode::malformed_namestr, "namestr length '" + namestr_size + "'" + detail::offset_text(member_at + 74));
    }
    r.expect(kDescriptorMagic, "descriptor header");
    const auto descriptor = r.take(2 * kRecord, "member descriptor");
    Member m;
    m.name = detail::trimmed(detail::view(descriptor, 8, 8));
    m.label = detail::trimmed(detail::view(descriptor, kRecord + 32, 40));

    const auto namestr_at = r.offset();
    r.expect(kNamestrMagic, "namestr header");
    const auto count_text = std::string(detail::view(data, namestr_at + 54, 4));
    std::size_t count = 0;
    for (char c : count_text) {
      if (c < '0' || c > '9') fail(ErrorCode::malformed_namestr, "variable count '" + count_text + "'" + detail::offset_text(namestr_at + 54));
      count = count * 10 + static_cast<std::size_t>(c - '0');
    }
    const auto block_at = r.offset();
    const auto block_len = (count * namestr_len + kRecord - 1) / kRecord * kRecord;
    const auto block = r.take(block_len, "namestr records");
    std::size_t position = 0;
    for (std::size_t i = 0; i < count; ++i) {
      auto v = detail::parse_namestr(block.subspan(i * namestr_len, namestr_len), block_at + i * namestr_len);
      if (v.position != position) {
        fail(ErrorCode::malformed_namestr, "variable " + v.name + " position " + std::to_string(v.position) +
                                               " != " + std::to_string(position) + detail::offset_text(block_at + i * namestr_len));
      }
      position += v.length;
      m.variables.push_back(std::move(v));
    }
    r.expect(kObsMagic, "observation header");

    // observations run until the next member header or the end of input
    const auto obs_at = r.offset();
    auto obs_end = obs_at;
    while (obs_end < data.size()) {
      if (obs_end + kRecord <= data.size() && detail::view(data, obs_end, kMemberMagic.size()) == kMemberMagic) break;
      obs_end += kRecord;
    }
    if (obs_end > data.size()) {
      fail(ErrorCode::truncated_record, "observation data not a multiple of 80 bytes" + detail::offset_text(data.size()));
    }
    const auto obs = data.subspan(obs_at, obs_end - obs_at);
    r.take(obs.size(), "observations");
    const auto width = m.row_width();
    if (width > 0) {
      std::size_t rows = obs.size() / width;
      // trailing all-blank rows are indistinguishable from record padding
      while (rows > 0) {
        const auto row = obs.subspan((rows - 1) * width, width);
        if (!std::all_of(row.begin(), row.end(), [](std::uint8_t c) { return c == ' '; })) break;
        --rows;
      }
      for (std::size_t i = 0; i < rows; ++i) {
        const auto row = obs.subspan(i * width, width);
        std::vector<Value> values;
        for (const auto& v : m.variables) {
          const auto cell = row.subspan(v.position, v.length);
          if (v.type == VarType::character) {
            values.emplace_back(detail::trimmed(detail::view(cell, 0, cell.size())));
          } else {
            const auto num = ibm_to_ieee(cell);
            if (const auto* d = std::get_if<double>(&num)) values.emplace_back(*d);
            else values.emplace_back(std::get<Missing>(num));
          }
        }
        m.rows.push_back(std::move(values));
      }
    }
    doc.members.push_back(std::move(m));
  }
  return doc;
}

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Document parse_file(const std::string& path) {
  const auto bytes = read_bytes(path);
  return parse_document(bytes);
}

struct Conversion {
  std::vector<VariableTable> tables;
  std::size_t duplicate_subjects = 0;
};

// One VariableTable per non-id variable across all members. Character values
// become codes (blank = missing); numeric missings become missing. Repeated
// subject ids keep the last row and are counted.
inline Conversion to_variable_tables(const Document& doc, const std::string& id_variable = "SEQN") {
  Conversion out;
  for (const auto& m : doc.members) {
    std::optional<std::size_t> id_col;
    for (std::size_t c = 0; c < m.variables.size(); ++c) {
      if (m.variables[c].name == id_variable) id_col = c;
    }
    if (!id_col || m.variables[*id_col].type != VarType::numeric) {
      fail(ErrorCode::missing_id_variable, "member " + m.name + " has no numeric " + id_variable);
    }
    std::map<std::int64_t, std::size_t> last_row;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      const auto* id = std::get_if<double>(&m.rows[i][*id_col]);
      if (!id) fail(ErrorCode::missing_id_variable, "member " + m.name + " row " + std::to_string(i) + " has a missing id");
      const auto key = static_cast<std::int64_t>(*id);
      if (!last_row.emplace(key, i).second) {
        last_row[key] = i;
        ++out.duplicate_subjects;
      }
    }
    for (std::size_t c = 0; c < m.variables.size(); ++c) {
      if (c == *id_col) continue;
      VariableTable t;
      t.variable_id = m.variables[c].name;
      for (const auto& [id, i] : last_row) {
        t.subject_ids.push_back(id);
        const auto& v = m.rows[i][c];
        if (const auto* d = std::get_if<double>(&v)) t.values.emplace_back(*d);
        else if (const auto* s = std::get_if<std::string>(&v)) t.values.push_back(s->empty() ? Cell{} : Cell{*s});
        else t.values.emplace_back(std::monostate{});
      }
      out.tables.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace costacq::xpt
