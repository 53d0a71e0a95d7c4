#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "costacq/acquisition.hpp"
#include "costacq/catalog.hpp"
#include "costacq/error.hpp"

namespace costacq {

// Bit m (1-based, most significant first) carries weight 2^-m.
inline double binary_weight(std::size_t m) { return std::ldexp(1.0, -static_cast<int>(m)); }

inline double binary_max(std::size_t levels) { return 1.0 - std::ldexp(1.0, -static_cast<int>(levels)); }

// l-bit fixed-point expansion of round(value * 2^l), most significant first.
inline std::vector<std::uint8_t> encode_binary(double value, std::size_t levels) {
  if (levels == 0 || levels > 52) fail(ErrorCode::out_of_range, "levels must be in [1,52]");
  constexpr double kSlack = 1e-12;
  if (!(value >= -kSlack && value <= binary_max(levels) + kSlack)) {
    fail(ErrorCode::out_of_range, "value " + std::to_string(value) + " outside [0, 1-2^-l]");
  }
  const auto top = (std::uint64_t{1} << levels) - 1;
  auto n = static_cast<std::uint64_t>(std::max(0.0, std::round(value * std::ldexp(1.0, static_cast<int>(levels)))));
  n = std::min(n, top);
  std::vector<std::uint8_t> bits(levels);
  for (std::size_t m = 0; m < levels; ++m) bits[m] = (n >> (levels - 1 - m)) & 1u;
  return bits;
}

template <typename T>
double decode_binary(std::span<const T> bits) {
  double v = 0.0;
  for (std::size_t m = 0; m < bits.size(); ++m) v += static_cast<double>(bits[m]) * binary_weight(m + 1);
  return v;
}

// Min-max scales each encoded column into [0, 1-2^-l] and expands it into l
// bits. Unobserved features are written as 0.5 in every bit.
class BinaryEncoder {
 public:
  static constexpr double kUnknownBit = 0.5;

  BinaryEncoder() = default;
  BinaryEncoder(std::size_t levels, std::vector<double> mins, std::vector<double> maxs)
      : levels_(levels), mins_(std::move(mins)), maxs_(std::move(maxs)) {
    if (levels_ == 0) fail(ErrorCode::out_of_range, "levels must be >= 1");
    if (mins_.size() != maxs_.size()) fail(ErrorCode::dimension_mismatch, "encoder ranges");
  }

  // Column ranges from the observed entries of training rows.
  static BinaryEncoder fit(const FeatureCatalog& catalog, const std::vector<std::vector<double>>& rows,
                           const std::vector<Mask>& availability, std::size_t levels) {
    const auto width = catalog.encoded_width();
    std::vector<double> mins(width, 0.0), maxs(width, 0.0);
    std::vector<bool> seen(width, false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < catalog.size(); ++j) {
        if (!availability[i][j]) continue;
        for (std::size_t c = catalog.offset(j); c < catalog.offset(j) + catalog.width(j); ++c) {
          const double v = rows[i][c];
          if (!seen[c]) {
            mins[c] = maxs[c] = v;
            seen[c] = true;
          } else {
            mins[c] = std::min(mins[c], v);
            maxs[c] = std::max(maxs[c], v);
          }
        }
      }
    }
    return BinaryEncoder(levels, std::move(mins), std::move(maxs));
  }

  std::size_t levels() const { return levels_; }
  std::size_t columns() const { return mins_.size(); }
  std::size_t bit_width() const { return mins_.size() * levels_; }

  double scale(std::size_t column, double value) const {
    const double span = maxs_[column] - mins_[column];
    if (!(span > 0.0)) return 0.0;
    return std::clamp((value - mins_[column]) / span, 0.0, 1.0) * binary_max(levels_);
  }

  // Bits of one column written into out[column * l ...].
  void encode_column(std::size_t column, double value, std::span<double> out) const {
    const auto bits = encode_binary(scale(column, value), levels_);
    for (std::size_t m = 0; m < levels_; ++m) out[column * levels_ + m] = bits[m];
  }

  std::vector<double> encode_state(const AcquisitionState& state, const FeatureCatalog& catalog) const {
    return encode(state.values, state.acquired, catalog);
  }

  std::vector<double> encode(std::span<const double> row, std::span<const std::uint8_t> observed,
                             const FeatureCatalog& catalog) const {
    if (row.size() != columns() || observed.size() != catalog.size()) {
      fail(ErrorCode::dimension_mismatch, "binary encoder input width");
    }
    std::vector<double> out(bit_width(), kUnknownBit);
    for (std::size_t j = 0; j < catalog.size(); ++j) {
      if (!observed[j]) continue;
      for (std::size_t c = catalog.offset(j); c < catalog.offset(j) + catalog.width(j); ++c) {
        encode_column(c, row[c], out);
      }
    }
    return out;
  }

  nlohmann::json to_json() const { return {{"levels", levels_}, {"mins", mins_}, {"maxs", maxs_}}; }
  static BinaryEncoder from_json(const nlohmann::json& j) {
    return BinaryEncoder(j.at("levels").get<std::size_t>(), j.at("mins").get<std::vector<double>>(),
                         j.at("maxs").get<std::vector<double>>());
  }

 private:
  std::size_t levels_ = 3;
  std::vector<double> mins_, maxs_;
};

}  // namespace costacq
