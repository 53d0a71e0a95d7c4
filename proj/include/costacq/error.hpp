#pragma once

#include <stdexcept>
#include <string>

namespace costacq {

enum class ErrorCode {
  // acquisition core
  already_acquired,
  index_out_of_range,
  dimension_mismatch,
  invalid_catalog,
  invalid_rule,
  // neural kernel
  non_finite_input,
  non_finite_loss,
  stale_cache,
  out_of_range,
  untrained_model,
  invalid_network,
  // strategies
  empty_store,
  zero_cost,
  diverged_q,
  invalid_config,
  // data pipeline
  degenerate_column,
  empty_vocabulary,
  insufficient_data,
  no_features_selected,
  invalid_measurement,
  no_indicators_configured,
  empty_join,
  // cost assignment
  empty_survey,
  unmapped_category,
  // xpt
  bad_magic,
  truncated_record,
  malformed_namestr,
  unsupported_version,
  missing_id_variable,
  // evaluation / io
  untrained_strategy,
  training_diverged,
  empty_results,
  io_error,
  parse_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::already_acquired: return "AlreadyAcquired";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::invalid_catalog: return "InvalidCatalog";
    case ErrorCode::invalid_rule: return "InvalidRule";
    case ErrorCode::non_finite_input: return "NonFiniteInput";
    case ErrorCode::non_finite_loss: return "NonFiniteLoss";
    case ErrorCode::stale_cache: return "StaleCache";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::untrained_model: return "UntrainedModel";
    case ErrorCode::invalid_network: return "InvalidNetwork";
    case ErrorCode::empty_store: return "EmptyStore";
    case ErrorCode::zero_cost: return "ZeroCost";
    case ErrorCode::diverged_q: return "DivergedQ";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::degenerate_column: return "DegenerateColumn";
    case ErrorCode::empty_vocabulary: return "EmptyVocabulary";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::no_features_selected: return "NoFeaturesSelected";
    case ErrorCode::invalid_measurement: return "InvalidMeasurement";
    case ErrorCode::no_indicators_configured: return "NoIndicatorsConfigured";
    case ErrorCode::empty_join: return "EmptyJoin";
    case ErrorCode::empty_survey: return "EmptySurvey";
    case ErrorCode::unmapped_category: return "UnmappedCategory";
    case ErrorCode::bad_magic: return "BadMagic";
    case ErrorCode::truncated_record: return "TruncatedRecord";
    case ErrorCode::malformed_namestr: return "MalformedNamestr";
    case ErrorCode::unsupported_version: return "UnsupportedVersion";
    case ErrorCode::missing_id_variable: return "MissingIdVariable";
    case ErrorCode::untrained_strategy: return "UntrainedStrategy";
    case ErrorCode::training_diverged: return "TrainingDiverged";
    case ErrorCode::empty_results: return "EmptyResults";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
  }
  return "Unknown";
}

// Errors caused by user-supplied configuration rather than by the data.
inline bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_config:
    case ErrorCode::invalid_rule:
    case ErrorCode::zero_cost:
    case ErrorCode::no_indicators_configured:
    case ErrorCode::unmapped_category:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace costacq
