#pragma once

#include <span>
#include <string>

namespace latalign {

/// Mean of per-class recalls over classes 0..n_classes-1. Every class must
/// occur in `labels` (MissingClass otherwise).
double balanced_accuracy(std::span<const int> labels, std::span<const int> predictions,
                         std::size_t n_classes);
/// Uses the classes that occur in `labels`.
double balanced_accuracy(std::span<const int> labels, std::span<const int> predictions);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  double mean_difference = 0.0;
  std::string stars;
  /// All differences equal and nonzero: t is infinite, p reported as 0.
  bool degenerate_perfect_shift = false;
};

/// Star string for a p-value: "***" < 0.001, "**" < 0.01, "*" < 0.05, "†" < 0.10.
std::string significance_stars(double p);

/// Two-sided paired t-test on a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace latalign
