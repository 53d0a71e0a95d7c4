#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "costacq/binning.hpp"
#include "costacq/error.hpp"

namespace costacq {

struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

// Population mean/std over the observed entries.
inline NormStats fit_normalization(std::span<const std::optional<double>> column) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : column) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) fail(ErrorCode::degenerate_column, "no observed values");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& v : column) {
    if (v) ss += (*v - mean) * (*v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (sd < 1e-12) fail(ErrorCode::degenerate_column, "zero variance");
  return {mean, sd};
}

inline std::vector<double> normalize(std::span<const std::optional<double>> column, const NormStats& stats) {
  std::vector<double> out(column.size(), 0.0);
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (column[i]) out[i] = (*column[i] - stats.mean) / stats.std;
  }
  return out;
}

inline std::vector<std::string> fit_vocabulary(std::span<const std::optional<std::string>> column) {
  std::vector<std::string> vocab;
  for (const auto& c : column) {
    if (c) vocab.push_back(*c);
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  if (vocab.empty()) fail(ErrorCode::empty_vocabulary, "no observed codes");
  return vocab;
}

struct OneHotColumns {
  std::vector<std::vector<double>> rows;  // one unit vector (or zeros) per entry
  std::size_t unseen = 0;                 // codes absent from the vocabulary
};

inline OneHotColumns one_hot(std::span<const std::optional<std::string>> column, const std::vector<std::string>& vocab) {
  if (vocab.empty()) fail(ErrorCode::empty_vocabulary, "empty vocabulary");
  OneHotColumns out;
  for (const auto& c : column) {
    std::vector<double> row(vocab.size(), 0.0);
    if (c) {
      const auto it = std::lower_bound(vocab.begin(), vocab.end(), *c);
      if (it != vocab.end() && *it == *c) row[static_cast<std::size_t>(it - vocab.begin())] = 1.0;
      else ++out.unseen;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Plug-in mutual information (nats) between two discrete codings.
inline double discrete_mutual_information(std::span<const int> x, std::span<const int> y) {
  const auto n = static_cast<double>(x.size());
  std::map<int, double> px, py;
  std::map<std::pair<int, int>, double> pxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += 1.0;
    py[y[i]] += 1.0;
    pxy[{x[i], y[i]}] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [key, count] : pxy) {
    mi += count / n * std::log(count * n / (px[key.first] * py[key.second]));
  }
  return std::max(0.0, mi);
}

namespace detail {

inline void require_two_labels(std::span<const int> labels) {
  for (auto l : labels) {
    if (l != labels.front()) return;
  }
  fail(ErrorCode::insufficient_data, "fewer than two distinct labels among observed rows");
}

}  // namespace detail

// MI between a real feature, discretized into equal-frequency bins, and the
// labels; rows where the feature is missing are skipped.
inline double mutual_information(std::span<const std::optional<double>> feature, std::span<const int> labels,
                                 std::size_t bins = 16) {
  if (feature.size() != labels.size()) fail(ErrorCode::dimension_mismatch, "feature/label lengths");
  std::vector<double> values;
  std::vector<int> y;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    if (!feature[i]) continue;
    values.push_back(*feature[i]);
    y.push_back(labels[i]);
  }
  if (y.empty()) fail(ErrorCode::insufficient_data, "feature never observed");
  detail::require_two_labels(y);
  const auto x = equal_frequency_bins(values, bins);
  return discrete_mutual_information(x, y);
}

// MI between categorical codes (used directly) and the labels.
inline double mutual_information(std::span<const std::optional<std::string>> feature, std::span<const int> labels) {
  if (feature.size() != labels.size()) fail(ErrorCode::dimension_mismatch, "feature/label lengths");
  std::map<std::string, int> ids;
  std::vector<int> x, y;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    if (!feature[i]) continue;
    x.push_back(ids.emplace(*feature[i], static_cast<int>(ids.size())).first->second);
    y.push_back(labels[i]);
  }
  if (y.empty()) fail(ErrorCode::insufficient_data, "feature never observed");
  detail::require_two_labels(y);
  return discrete_mutual_information(x, y);
}

}  // namespace costacq
