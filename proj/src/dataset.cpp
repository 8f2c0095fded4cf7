#include "cif/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cif/errors.hpp"
#include "cif/kernels.hpp"

namespace cif {

namespace {

std::string list_times(const std::vector<double>& times) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) os << ", ";
    if (i == 20) {
      os << "... (" << times.size() << " total)";
      break;
    }
    os << times[i];
  }
  return os.str();
}

// Distinct times shared by two or more uncensored subjects.
std::vector<double> tied_event_times(const SurvivalDataset& data) {
  std::map<double, int> counts;
  for (const auto& s : data.subjects()) {
    if (s.event != 0) ++counts[s.time];
  }
  std::vector<double> tied;
  for (const auto& [t, c] : counts) {
    if (c > 1) tied.push_back(t);
  }
  return tied;
}

}  // namespace

SurvivalDataset::SurvivalDataset(std::vector<SubjectRecord> subjects, int num_causes, std::size_t covariate_dim)
    : subjects_(std::move(subjects)), num_causes_(num_causes), covariate_dim_(covariate_dim) {
  int max_code = 0;
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    const auto& s = subjects_[i];
    if (!std::isfinite(s.time) || s.time <= 0.0) {
      throw Error(ErrorCode::InvalidDataset, "subject " + std::to_string(i) + " has non-positive or non-finite time");
    }
    if (s.event < 0) {
      throw Error(ErrorCode::InvalidDataset, "subject " + std::to_string(i) + " has negative event code");
    }
    if (s.covariates.size() != covariate_dim_) {
      throw Error(ErrorCode::InvalidDataset, "subject " + std::to_string(i) + " has " +
                                                 std::to_string(s.covariates.size()) + " covariates, expected " +
                                                 std::to_string(covariate_dim_));
    }
    for (double z : s.covariates) {
      if (!std::isfinite(z)) {
        throw Error(ErrorCode::InvalidDataset, "subject " + std::to_string(i) + " has a non-finite covariate");
      }
    }
    if (!std::isfinite(s.weight) || s.weight <= 0.0) {
      throw Error(ErrorCode::InvalidDataset, "subject " + std::to_string(i) + " has non-positive weight");
    }
    max_code = std::max(max_code, s.event);
  }
  if (num_causes_ <= 0) num_causes_ = std::max(1, max_code);
  if (max_code > num_causes_) {
    throw Error(ErrorCode::InvalidDataset,
                "event code " + std::to_string(max_code) + " exceeds cause count " + std::to_string(num_causes_));
  }
}

SurvivalDataset SurvivalDataset::with_weights(std::span<const double> weights) const {
  if (weights.size() != subjects_.size()) throw Error(ErrorCode::InvalidArgument, "weight vector length mismatch");
  auto copy = subjects_;
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i].weight = weights[i];
  return SurvivalDataset(std::move(copy), num_causes_, covariate_dim_);
}

SurvivalDataset SurvivalDataset::with_times(std::span<const double> times) const {
  if (times.size() != subjects_.size()) throw Error(ErrorCode::InvalidArgument, "time vector length mismatch");
  auto copy = subjects_;
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i].time = times[i];
  return SurvivalDataset(std::move(copy), num_causes_, covariate_dim_);
}

std::size_t SurvivalDataset::count_events(int cause) const {
  return static_cast<std::size_t>(
      std::count_if(subjects_.begin(), subjects_.end(), [cause](const SubjectRecord& s) { return s.event == cause; }));
}

std::size_t EventIndex::count_at(double t) const {
  return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

EventIndex build_event_index(const SurvivalDataset& data) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].event != 0) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return data[a].time < data[b].time; });

  EventIndex out;
  out.times.reserve(idx.size());
  for (std::size_t i : idx) {
    if (!out.times.empty() && out.times.back() == data[i].time) {
      throw Error(ErrorCode::TiedEventTimes, "tied event times: " + list_times(tied_event_times(data)));
    }
    out.times.push_back(data[i].time);
    out.failer.push_back(i);
    out.cause.push_back(data[i].event);
  }
  return out;
}

SurvivalDataset resolve_ties(const SurvivalDataset& data, TiePolicy policy, TieReport* report) {
  const auto tied = tied_event_times(data);
  TieReport local;
  local.tie_groups = tied.size();
  local.tied_times = tied;
  if (tied.empty()) {
    if (report) *report = local;
    return data;
  }
  if (policy == TiePolicy::Reject) {
    throw Error(ErrorCode::TiedEventTimes, "tied event times: " + list_times(tied));
  }

  std::vector<double> times(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) times[i] = data[i].time;
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  local.step = 1e-9 * median;

  std::map<double, int> seen;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].event == 0) continue;
    if (!std::binary_search(tied.begin(), tied.end(), data[i].time)) continue;
    const int rank = seen[data[i].time]++;
    if (rank > 0) {
      times[i] = data[i].time + rank * local.step;
      ++local.adjusted;
    }
  }
  SurvivalDataset out = data.with_times(times);
  if (auto left = tied_event_times(out); !left.empty()) {
    throw Error(ErrorCode::TiedEventTimes, "ties remain after jitter: " + list_times(left));
  }
  if (report) *report = local;
  return out;
}

double risk_sum(const SurvivalDataset& data, std::span<const double> theta, double t) {
  if (theta.size() != data.size()) throw Error(ErrorCode::InvalidArgument, "theta length mismatch");
  std::vector<double> v(data.size());
  std::vector<double> key(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    v[i] = data[i].weight * theta[i];
    key[i] = data[i].time;
  }
  return kernels::sum_where_ge(v, key, t);
}

RiskSetData::RiskSetData(const SurvivalDataset& data) : num_causes_(data.num_causes()) {
  const std::size_t n = data.size();
  const std::size_t d = data.covariate_dim();
  index_ = build_event_index(data);

  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return data[a].time < data[b].time; });

  time_.resize(n);
  event_.resize(n);
  weight_.resize(n);
  columns_.assign(d, std::vector<double>(n));
  std::vector<std::size_t> position(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = data[order_[i]];
    position[order_[i]] = i;
    time_[i] = s.time;
    event_[i] = s.event;
    weight_[i] = s.weight;
    for (std::size_t c = 0; c < d; ++c) columns_[c][i] = s.covariates[c];
  }
  risk_start_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    risk_start_[i] = (i > 0 && time_[i - 1] == time_[i]) ? risk_start_[i - 1] : i;
  }
  event_position_.resize(index_.size());
  for (std::size_t k = 0; k < index_.size(); ++k) event_position_[k] = position[index_.failer[k]];
}

RiskSetData RiskSetData::reweighted(std::span<const double> input_order_weights) const {
  if (input_order_weights.size() != size()) throw Error(ErrorCode::InvalidArgument, "weight vector length mismatch");
  RiskSetData copy = *this;
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = input_order_weights[order_[i]];
    if (!std::isfinite(w) || w <= 0.0) throw Error(ErrorCode::InvalidArgument, "weights must be positive");
    copy.weight_[i] = w;
  }
  return copy;
}

}  // namespace cif
