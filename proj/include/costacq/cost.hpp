#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <string_view>

#include "costacq/error.hpp"

namespace costacq {

// Acquisition cost in survey units, stored as an exact count of millionths so
// that sums over trajectories compare exactly.
class Cost {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Cost() = default;

  static constexpr Cost from_micros(std::int64_t micros) {
    Cost c;
    c.micros_ = micros;
    return c;
  }
  static constexpr Cost units(std::int64_t whole) { return from_micros(whole * kScale); }
  static Cost from_double(double value) {
    if (!std::isfinite(value)) fail(ErrorCode::parse_error, "non-finite cost");
    return from_micros(static_cast<std::int64_t>(std::llround(value * kScale)));
  }
  static constexpr Cost unlimited() { return from_micros(std::numeric_limits<std::int64_t>::max() / 4); }

  // Parses a plain decimal ("9", "4.5", "0.125"); at most six fractional digits.
  static Cost parse(std::string_view text) {
    auto bad = [&] { fail(ErrorCode::parse_error, "invalid cost '" + std::string(text) + "'"); };
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    if (text == "inf" || text == "unlimited") return unlimited();
    bool negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
      negative = text.front() == '-';
      text.remove_prefix(1);
    }
    if (text.empty()) bad();
    std::int64_t whole = 0, frac = 0;
    int frac_digits = 0;
    bool seen_dot = false, seen_digit = false;
    for (char ch : text) {
      if (ch == '.') {
        if (seen_dot) bad();
        seen_dot = true;
      } else if (ch >= '0' && ch <= '9') {
        seen_digit = true;
        if (seen_dot) {
          if (++frac_digits > 6) bad();
          frac = frac * 10 + (ch - '0');
        } else {
          whole = whole * 10 + (ch - '0');
          if (whole > 1'000'000'000'000LL) bad();
        }
      } else {
        bad();
      }
    }
    if (!seen_digit) bad();
    for (int i = frac_digits; i < 6; ++i) frac *= 10;
    const std::int64_t micros = whole * kScale + frac;
    return from_micros(negative ? -micros : micros);
  }

  constexpr std::int64_t micros() const { return micros_; }
  constexpr double to_double() const { return static_cast<double>(micros_) / kScale; }
  constexpr bool is_unlimited() const { return micros_ >= unlimited().micros_; }

  std::string str() const {
    if (is_unlimited()) return "inf";
    std::int64_t m = micros_;
    std::string sign = m < 0 ? "-" : "";
    if (m < 0) m = -m;
    std::string out = sign + std::to_string(m / kScale);
    std::int64_t frac = m % kScale;
    if (frac != 0) {
      std::string digits = std::to_string(frac);
      digits.insert(0, 6 - digits.size(), '0');
      while (digits.back() == '0') digits.pop_back();
      out += "." + digits;
    }
    return out;
  }

  Cost scaled(double factor) const { return from_double(to_double() * factor); }

  constexpr Cost& operator+=(Cost o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Cost& operator-=(Cost o) {
    micros_ -= o.micros_;
    return *this;
  }
  friend constexpr Cost operator+(Cost a, Cost b) { return a += b; }
  friend constexpr Cost operator-(Cost a, Cost b) { return a -= b; }
  friend constexpr auto operator<=>(Cost, Cost) = default;

 private:
  std::int64_t micros_ = 0;
};

}  // namespace costacq
