#pragma once

// Group-level fairness metrics for quantile estimators and the post-hoc
// correction procedure: effective quantiles per category, the covariance
// fairness measure, and an affine per-group adjustment fitted by quantile
// regression of residuals on category indicators.

#include <cstddef>
#include <vector>

#include "fairqr/quantile.hpp"

namespace fairqr {

// Integer-coded protected attribute with categories 0..K-1. Construction
// validates that K >= 2, that every value is in range, and that every
// category actually appears (EmptyGroupError otherwise).
class ProtectedAttribute {
 public:
  ProtectedAttribute(std::vector<int> values, std::size_t categories);

  static ProtectedAttribute binary(std::vector<int> values);

  std::size_t categories() const { return categories_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<int>& values() const { return values_; }
  int operator[](std::size_t i) const { return values_[i]; }
  const std::vector<std::size_t>& group_sizes() const { return group_sizes_; }

 private:
  std::vector<int> values_;
  std::size_t categories_ = 0;
  std::vector<std::size_t> group_sizes_;
};

// Affine per-group shift. Categories 0..K-2 carry explicit offsets; the
// reference category K-1 is absorbed by the intercept and its offset is 0.
struct Adjustment {
  double tau = 0.5;
  double intercept = 0.0;
  std::vector<double> offsets;
  std::size_t reference_category = 0;

  std::size_t categories() const { return offsets.size() + 1; }
  double offset_for(std::size_t category) const;
  void validate() const;

  bool operator==(const Adjustment&) const = default;
};

struct FairnessReport {
  double tau = 0.5;
  std::vector<double> effective_quantiles;
  double max_gap = 0.0;
  double covariance_measure = 0.0;
  double risk = 0.0;  // mean check loss of the predictions
  std::vector<std::size_t> group_sizes;

  bool operator==(const FairnessReport&) const = default;
};

// Per-category realized coverage: the fraction of group a with Y <= prediction.
// Ties Y == prediction count as covered.
std::vector<double> effective_quantiles(const std::vector<double>& predictions,
                                        const std::vector<double>& y,
                                        const ProtectedAttribute& a);

// Empirical covariance between the attribute (as real values) and the
// exceedance indicator 1{Y > prediction}. A constant attribute returns
// exactly 0.0. For a binary 0/1 attribute this is computed as
// (n0/n) * (n1/n) * (tau0 - tau1), the algebraically identical counting form,
// so it matches effective_quantiles bit for bit.
double fairness_covariance(const std::vector<double>& predictions, const std::vector<double>& y,
                           const std::vector<double>& a_values);
double fairness_covariance(const std::vector<double>& predictions, const std::vector<double>& y,
                           const ProtectedAttribute& a);

// Quantile regression of the residuals Y - base_predictions on
// [intercept, 1{A=0}, ..., 1{A=K-2}] at the requested level. The intercept is
// the fitted shift of the reference category K-1; offsets[a] shifts category a
// relative to it. For binary A the two fitted levels are generically the
// within-group residual tau-quantiles.
Adjustment fit_adjustment(const std::vector<double>& base_predictions,
                          const std::vector<double>& y, const ProtectedAttribute& a, double tau,
                          const SolverOptions& options = {});

// prediction_i + intercept + offset(category_i). Accepts raw category values
// so it can be applied to samples where some categories are absent.
std::vector<double> apply_adjustment(const std::vector<double>& base_predictions,
                                     const std::vector<int>& a, const Adjustment& adj);
std::vector<double> apply_adjustment(const std::vector<double>& base_predictions,
                                     const ProtectedAttribute& a, const Adjustment& adj);

// Bundles effective quantiles, the largest pairwise gap, the covariance
// measure, mean check loss and group sizes for one set of predictions.
FairnessReport fairness_report(const std::vector<double>& predictions,
                               const std::vector<double>& y, const ProtectedAttribute& a,
                               double tau);

// Per-group effective quantiles on a test sample before and after the
// correction, across a list of target levels. Values are stored as levels in
// (0, 1); the CSV layout prints them as percentages.
struct BeforeAfterTable {
  std::vector<double> targets;               // quantile levels
  std::vector<std::vector<double>> before;   // [group][target]
  std::vector<std::vector<double>> after;    // [group][target]
  std::vector<std::size_t> group_sizes;      // test-sample group sizes

  bool operator==(const BeforeAfterTable&) const = default;
};

// Full pipeline for one target level after another: fit the base quantile
// regression on (x_train, y_train), fit the correction on the adjustment
// sample, and measure per-group effective quantiles of both the base and the
// corrected predictor on the test sample. The three designs must share one
// column layout that excludes the protected attribute.
BeforeAfterTable before_after_table(const DesignMatrix& x_train,
                                    const std::vector<double>& y_train,
                                    const DesignMatrix& x_adjust,
                                    const std::vector<double>& y_adjust,
                                    const ProtectedAttribute& a_adjust,
                                    const DesignMatrix& x_test, const std::vector<double>& y_test,
                                    const ProtectedAttribute& a_test,
                                    const std::vector<double>& targets,
                                    const SolverOptions& options = {});

}  // namespace fairqr
