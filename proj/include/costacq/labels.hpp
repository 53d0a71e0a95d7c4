#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>

#include "costacq/error.hpp"

namespace costacq {

enum class DiabetesClass : int { normal = 0, prediabetes = 1, diabetes = 2 };

// Fasting glucose (mg/dL): < 100 normal, 100..125 prediabetes, > 125 diabetes.
inline int label_diabetes(double glucose_mg_dl) {
  if (!std::isfinite(glucose_mg_dl) || glucose_mg_dl <= 0.0) {
    fail(ErrorCode::invalid_measurement, "glucose " + std::to_string(glucose_mg_dl));
  }
  if (glucose_mg_dl < 100.0) return static_cast<int>(DiabetesClass::normal);
  if (glucose_mg_dl <= 125.0) return static_cast<int>(DiabetesClass::prediabetes);
  return static_cast<int>(DiabetesClass::diabetes);
}

// Systolic pressure strictly above 140 mmHg is hypertensive.
inline int label_hypertension(double systolic_mm_hg) {
  if (!std::isfinite(systolic_mm_hg) || systolic_mm_hg <= 0.0) {
    fail(ErrorCode::invalid_measurement, "systolic pressure " + std::to_string(systolic_mm_hg));
  }
  return systolic_mm_hg > 140.0 ? 1 : 0;
}

// 1 if any reported condition is affirmative, 0 if all reported are negative,
// nullopt (excluded) when nothing was reported.
inline std::optional<int> label_heart_disease(std::span<const std::optional<bool>> indicators) {
  if (indicators.empty()) fail(ErrorCode::no_indicators_configured, "heart disease needs indicator variables");
  bool any_reported = false;
  for (const auto& v : indicators) {
    if (!v) continue;
    if (*v) return 1;
    any_reported = true;
  }
  return any_reported ? std::optional<int>(0) : std::nullopt;
}

}  // namespace costacq
