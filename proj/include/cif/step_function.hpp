#pragma once

#include <span>
#include <vector>

namespace cif {

/// Right-continuous piecewise-constant function on [0, inf).
///
/// `values[k]` holds on [jump_times[k], jump_times[k+1]); `initial_value`
/// holds on [0, jump_times[0]). A "jump" with zero height is allowed, which
/// lets several curves share one time grid.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> jump_times, std::vector<double> values, double initial_value = 0.0);

  double operator()(double t) const;
  /// f(t-): value just before t.
  double left_limit(double t) const;
  /// f(t) - f(t-); zero away from the grid.
  double jump(double t) const;

  std::span<const double> jump_times() const { return jump_times_; }
  std::span<const double> values() const { return values_; }
  double initial_value() const { return initial_value_; }
  std::size_t size() const { return jump_times_.size(); }
  bool empty() const { return jump_times_.empty(); }
  /// Value after the last jump (initial value if there are none).
  double final_value() const { return values_.empty() ? initial_value_ : values_.back(); }

  bool same_grid(const StepFunction& other) const { return jump_times_ == other.jump_times_; }

  /// Pointwise sum; both operands must share the grid.
  StepFunction& operator+=(const StepFunction& other);

 private:
  std::vector<double> jump_times_;
  std::vector<double> values_;
  double initial_value_ = 0.0;
};

}  // namespace cif
