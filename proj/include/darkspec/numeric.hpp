#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace darkspec {

/// Exactly rounded floating-point summation (Shewchuk partials). The result
/// is the correctly rounded value of the exact sum, so it does not depend on
/// the order in which terms are added.
class ExactSum {
 public:
  void add(double x);
  ExactSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const;

 private:
  std::vector<double> partials_;
};

double exact_sum(std::span<const double> xs);

/// Online mean / central moments (Welford with third and fourth moments).
class RunningStats {
 public:
  void push(double x);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased (n - 1) sample variance; 0 for fewer than two samples.
  double variance() const;
  /// Standard error of the mean.
  double standard_error() const;
  /// Large-sample standard error of the sample variance,
  /// sqrt((m4 - m2^2) / n) with plug-in central moments.
  double variance_standard_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

}  // namespace darkspec
