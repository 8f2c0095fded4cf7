#include "cif/step_function.hpp"

#include <algorithm>

#include "cif/errors.hpp"

namespace cif {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::TiedEventTimes: return "TiedEventTimes";
    case ErrorCode::NoEventsForCause: return "NoEventsForCause";
    case ErrorCode::MixedMethods: return "MixedMethods";
    case ErrorCode::NegativePrefix: return "NegativePrefix";
    case ErrorCode::BootstrapFitFailure: return "BootstrapFitFailure";
    case ErrorCode::CalibrationFailure: return "CalibrationFailure";
    case ErrorCode::RootFindFailure: return "RootFindFailure";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonnumericCell: return "NonnumericCell";
    case ErrorCode::NonpositiveTime: return "NonpositiveTime";
    case ErrorCode::UnknownEventCode: return "UnknownEventCode";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

StepFunction::StepFunction(std::vector<double> jump_times, std::vector<double> values, double initial_value)
    : jump_times_(std::move(jump_times)), values_(std::move(values)), initial_value_(initial_value) {
  if (jump_times_.size() != values_.size()) {
    throw Error(ErrorCode::InvalidArgument, "step function needs one value per jump time");
  }
  if (!std::is_sorted(jump_times_.begin(), jump_times_.end())) {
    throw Error(ErrorCode::InvalidArgument, "step function jump times must be increasing");
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return initial_value_;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return initial_value_;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepFunction::jump(double t) const { return (*this)(t) - left_limit(t); }

StepFunction& StepFunction::operator+=(const StepFunction& other) {
  if (!same_grid(other)) {
    throw Error(ErrorCode::InvalidArgument, "cannot add step functions on different grids");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  initial_value_ += other.initial_value_;
  return *this;
}

}  // namespace cif
