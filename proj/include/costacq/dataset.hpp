#pragma once

#include <span>
#include <string>
#include <vector>

#include "costacq/acquisition.hpp"
#include "costacq/catalog.hpp"

namespace costacq {

// Encoded, normalized instances ready for acquisition. Missing entries are 0.
struct Dataset {
  FeatureCatalog catalog;
  std::size_t num_classes = 2;
  std::vector<std::vector<double>> rows;  // N x encoded width
  std::vector<Mask> availability;         // N x d
  std::vector<int> labels;
  std::string task_name;

  std::size_t size() const { return rows.size(); }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.catalog = catalog;
    out.num_classes = num_classes;
    out.task_name = task_name;
    for (auto i : indices) {
      out.rows.push_back(rows.at(i));
      out.availability.push_back(availability.at(i));
      out.labels.push_back(labels.at(i));
    }
    return out;
  }

  Dataset with_catalog(FeatureCatalog c) const {
    Dataset out = *this;
    out.catalog = std::move(c);
    return out;
  }

  void validate() const {
    if (rows.size() != availability.size() || rows.size() != labels.size()) {
      fail(ErrorCode::dimension_mismatch, "dataset row counts disagree");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != catalog.encoded_width() || availability[i].size() != catalog.size()) {
        fail(ErrorCode::dimension_mismatch, "dataset row " + std::to_string(i) + " width");
      }
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
        fail(ErrorCode::out_of_range, "label out of range at row " + std::to_string(i));
      }
    }
  }
};

}  // namespace costacq
