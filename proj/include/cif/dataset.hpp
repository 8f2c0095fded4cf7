#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cif {

struct SubjectRecord {
  double time = 0.0;             // follow-up time X_i
  int event = 0;                 // 0 = censored, 1..J = cause
  std::vector<double> covariates;
  double weight = 1.0;           // bootstrap weight; 1 for ordinary fits

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

/// Right-censored competing-risks sample. Subjects stay in input order.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  /// Validates every subject; `num_causes` of 0 means "infer from the largest event code".
  SurvivalDataset(std::vector<SubjectRecord> subjects, int num_causes, std::size_t covariate_dim);

  std::span<const SubjectRecord> subjects() const { return subjects_; }
  const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }
  std::size_t size() const { return subjects_.size(); }
  int num_causes() const { return num_causes_; }
  std::size_t covariate_dim() const { return covariate_dim_; }

  /// Copy with the weight field replaced (input order).
  SurvivalDataset with_weights(std::span<const double> weights) const;
  /// Copy with subject times replaced (input order); used by tie resolution.
  SurvivalDataset with_times(std::span<const double> times) const;

  std::size_t count_events(int cause) const;

  friend bool operator==(const SurvivalDataset&, const SurvivalDataset&) = default;

 private:
  std::vector<SubjectRecord> subjects_;
  int num_causes_ = 1;
  std::size_t covariate_dim_ = 0;
};

/// Ordered distinct event times with the failing subject and its cause.
struct EventIndex {
  std::vector<double> times;        // strictly increasing
  std::vector<std::size_t> failer;  // input-order subject index I(k)
  std::vector<int> cause;           // D_(k)

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  /// K(t): number of event times in [0, t].
  std::size_t count_at(double t) const;
};

enum class TiePolicy { Reject, Jitter };

struct TieReport {
  std::size_t tie_groups = 0;      // distinct times shared by two or more events
  std::size_t adjusted = 0;        // subjects whose time was perturbed
  double step = 0.0;               // perturbation unit
  std::vector<double> tied_times;  // offending times, increasing
};

/// Throws TiedEventTimes if two uncensored subjects share a time.
EventIndex build_event_index(const SurvivalDataset& data);

/// Applies the tie policy. Under Jitter the r-th extra member (input order) of each
/// group of equal uncensored times is moved by r * 1e-9 * median(time); under
/// Reject a TiedEventTimes error lists the offending times.
SurvivalDataset resolve_ties(const SurvivalDataset& data, TiePolicy policy, TieReport* report = nullptr);

/// sum_i w_i * 1{X_i >= t} * theta_i
double risk_sum(const SurvivalDataset& data, std::span<const double> theta, double t);

/// Time-sorted, column-major copy of a dataset: the layout every estimator and
/// the Cox fit run on. Built once per dataset; the bootstrap swaps weights only.
class RiskSetData {
 public:
  explicit RiskSetData(const SurvivalDataset& data);

  std::size_t size() const { return time_.size(); }
  int num_causes() const { return num_causes_; }
  std::size_t covariate_dim() const { return columns_.size(); }

  std::span<const double> times() const { return time_; }
  std::span<const int> events() const { return event_; }
  std::span<const double> weights() const { return weight_; }
  std::span<const double> column(std::size_t c) const { return columns_[c]; }
  /// Input-order index of the subject at sorted position i.
  std::span<const std::size_t> order() const { return order_; }
  /// First sorted position whose time equals time[i]; the risk set at time[i] is [risk_start(i), n).
  std::span<const std::size_t> risk_start() const { return risk_start_; }

  const EventIndex& index() const { return index_; }
  /// Sorted position of the k-th event's failer.
  std::span<const std::size_t> event_position() const { return event_position_; }

  /// Same layout, new weights given in input order.
  RiskSetData reweighted(std::span<const double> input_order_weights) const;

 private:
  std::vector<double> time_;
  std::vector<int> event_;
  std::vector<double> weight_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> risk_start_;
  EventIndex index_;
  std::vector<std::size_t> event_position_;
  int num_causes_ = 1;
};

}  // namespace cif
