#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace costacq {

// Equal-frequency bin index for each value. Bins follow rank order, at most
// `bins` of them, and tied values always share a bin.
inline std::vector<int> equal_frequency_bins(std::span<const double> values, std::size_t bins) {
  const auto n = values.size();
  std::vector<int> out(n, 0);
  if (n == 0 || bins == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  int current = -1;
  std::size_t bin_start = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto target = r * bins / n;
    const bool tied = r > 0 && values[order[r]] == values[order[r - 1]];
    if (current < 0 || (target != bin_start && !tied)) {
      ++current;
      bin_start = target;
    }
    out[order[r]] = current;
  }
  return out;
}

}  // namespace costacq
