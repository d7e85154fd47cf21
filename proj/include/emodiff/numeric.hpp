#pragma once

#include <cmath>
#include <cstddef>

namespace emodiff {

// Neumaier compensated accumulator; the running sum is independent of how
// callers chunk their input, which keeps reductions deterministic.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <typename It>
double compensated_sum(It first, It last) {
  CompensatedSum acc;
  for (; first != last; ++first) acc.add(*first);
  return acc.value();
}

}  // namespace emodiff
