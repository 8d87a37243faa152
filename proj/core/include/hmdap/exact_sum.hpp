#pragma once

#include <span>
#include <vector>

namespace hmdap {

/// Floating-point accumulator that tracks the exact sum as a list of
/// non-overlapping partials (Shewchuk). result() is the correctly rounded
/// exact sum, so it does not depend on the order values were added or on how
/// partial accumulators were merged.
class ExactSum {
 public:
  void add(double x);
  void merge(const ExactSum& other);
  double result() const;
  bool empty() const noexcept { return partials_.empty() && nonfinite_ == 0.0; }

 private:
  std::vector<double> partials_;
  // Accumulates inf/nan inputs separately; finite partials stay exact.
  double nonfinite_ = 0.0;
};

double exact_sum(std::span<const double> values);

}  // namespace hmdap
