#include "fairqr/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairqr/design.hpp"
#include "fairqr/errors.hpp"
#include "fairqr/kernels.hpp"

namespace fairqr {
namespace {

void require_same_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DataError(std::string(what) + " has " + std::to_string(got) + " entries, expected " +
                    std::to_string(want));
  }
}

void require_finite(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DataError(std::string(what) + " entry " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace

ProtectedAttribute::ProtectedAttribute(std::vector<int> values, std::size_t categories)
    : values_(std::move(values)), categories_(categories) {
  if (categories_ < 2) {
    throw DataError("protected attribute needs at least 2 categories, got " +
                    std::to_string(categories_));
  }
  if (values_.empty()) throw DataError("protected attribute has no observations");
  group_sizes_.assign(categories_, 0);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const int v = values_[i];
    if (v < 0 || static_cast<std::size_t>(v) >= categories_) {
      throw DataError("protected attribute entry " + std::to_string(i) + " is " +
                      std::to_string(v) + ", outside 0.." + std::to_string(categories_ - 1));
    }
    ++group_sizes_[static_cast<std::size_t>(v)];
  }
  for (std::size_t k = 0; k < categories_; ++k) {
    if (group_sizes_[k] == 0) {
      throw EmptyGroupError("protected attribute category " + std::to_string(k) +
                            " has no observations");
    }
  }
}

ProtectedAttribute ProtectedAttribute::binary(std::vector<int> values) {
  return ProtectedAttribute(std::move(values), 2);
}

double Adjustment::offset_for(std::size_t category) const {
  if (category >= categories()) {
    throw DataError("adjustment: category " + std::to_string(category) + " is outside 0.." +
                    std::to_string(categories() - 1));
  }
  if (category == reference_category) return 0.0;
  return offsets[category];
}

void Adjustment::validate() const {
  const QuantileLevel level(tau);
  (void)level;
  if (reference_category != offsets.size()) {
    throw DataError("adjustment: reference category must be the last one (index " +
                    std::to_string(offsets.size()) + "), got " +
                    std::to_string(reference_category));
  }
  if (!std::isfinite(intercept)) throw DataError("adjustment: intercept is not finite");
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    if (!std::isfinite(offsets[k])) {
      throw DataError("adjustment: offset for category " + std::to_string(k) + " is not finite");
    }
  }
}

std::vector<double> effective_quantiles(const std::vector<double>& predictions,
                                        const std::vector<double>& y,
                                        const ProtectedAttribute& a) {
  const std::size_t n = a.size();
  require_same_length(predictions.size(), n, "prediction vector");
  require_same_length(y.size(), n, "response vector");
  require_finite(predictions, "prediction vector");
  require_finite(y, "response vector");

  // One shared comparator with fairness_covariance: exceed means Y strictly
  // above the prediction, so ties count toward coverage.
  std::vector<std::size_t> covered(a.categories(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool exceed = y[i] > predictions[i];
    if (!exceed) ++covered[static_cast<std::size_t>(a[i])];
  }
  std::vector<double> out(a.categories());
  for (std::size_t k = 0; k < a.categories(); ++k) {
    out[k] = static_cast<double>(covered[k]) / static_cast<double>(a.group_sizes()[k]);
  }
  return out;
}

double fairness_covariance(const std::vector<double>& predictions, const std::vector<double>& y,
                           const std::vector<double>& a_values) {
  const std::size_t n = a_values.size();
  if (n == 0) throw DataError("fairness covariance: empty input");
  require_same_length(predictions.size(), n, "prediction vector");
  require_same_length(y.size(), n, "response vector");
  require_finite(predictions, "prediction vector");
  require_finite(y, "response vector");
  require_finite(a_values, "attribute vector");

  const bool constant = std::all_of(a_values.begin(), a_values.end(),
                                    [&](double v) { return v == a_values[0]; });
  if (constant) return 0.0;

  const bool binary01 = std::all_of(a_values.begin(), a_values.end(),
                                    [](double v) { return v == 0.0 || v == 1.0; });
  if (binary01) {
    std::size_t n1 = 0;
    std::size_t covered0 = 0;
    std::size_t covered1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool exceed = y[i] > predictions[i];
      if (a_values[i] == 1.0) {
        ++n1;
        if (!exceed) ++covered1;
      } else if (!exceed) {
        ++covered0;
      }
    }
    const std::size_t n0 = n - n1;
    const double pi0 = static_cast<double>(n0) / static_cast<double>(n);
    const double pi1 = static_cast<double>(n1) / static_cast<double>(n);
    const double tau0 = static_cast<double>(covered0) / static_cast<double>(n0);
    const double tau1 = static_cast<double>(covered1) / static_cast<double>(n1);
    return pi0 * pi1 * (tau0 - tau1);
  }

  double a_mean = 0.0;
  double g_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a_mean += a_values[i];
    g_mean += y[i] > predictions[i] ? 1.0 : 0.0;
  }
  a_mean /= static_cast<double>(n);
  g_mean /= static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = y[i] > predictions[i] ? 1.0 : 0.0;
    acc += (a_values[i] - a_mean) * (g - g_mean);
  }
  return acc / static_cast<double>(n);
}

double fairness_covariance(const std::vector<double>& predictions, const std::vector<double>& y,
                           const ProtectedAttribute& a) {
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) values[i] = static_cast<double>(a[i]);
  return fairness_covariance(predictions, y, values);
}

Adjustment fit_adjustment(const std::vector<double>& base_predictions,
                          const std::vector<double>& y, const ProtectedAttribute& a, double tau,
                          const SolverOptions& options) {
  const QuantileLevel level(tau);
  const std::size_t n = a.size();
  const std::size_t k = a.categories();
  require_same_length(base_predictions.size(), n, "prediction vector");
  require_same_length(y.size(), n, "response vector");
  require_finite(base_predictions, "prediction vector");
  require_finite(y, "response vector");

  std::vector<double> residuals(n);
  kernels::sub(y.data(), base_predictions.data(), residuals.data(), n);

  // Design [1, 1{A=0}, ..., 1{A=K-2}]: the intercept absorbs the reference
  // category K-1. Full rank because category K-1 is guaranteed nonempty.
  std::vector<double> design(n * k, 0.0);
  std::vector<std::string> names;
  names.reserve(k);
  names.emplace_back("intercept");
  for (std::size_t j = 0; j + 1 < k; ++j) names.push_back("group" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    design[i * k] = 1.0;
    const auto cat = static_cast<std::size_t>(a[i]);
    if (cat + 1 < k) design[i * k + 1 + cat] = 1.0;
  }
  const DesignMatrix x(std::move(design), n, k, std::move(names), /*has_intercept=*/true);

  const QuantileFit fit_result = fit(x, residuals, level, options);

  Adjustment adj;
  adj.tau = level.value();
  adj.intercept = fit_result.beta[0];
  adj.offsets.assign(fit_result.beta.begin() + 1, fit_result.beta.end());
  adj.reference_category = k - 1;
  adj.validate();
  return adj;
}

std::vector<double> apply_adjustment(const std::vector<double>& base_predictions,
                                     const std::vector<int>& a, const Adjustment& adj) {
  adj.validate();
  const std::size_t n = base_predictions.size();
  require_same_length(a.size(), n, "attribute vector");
  require_finite(base_predictions, "prediction vector");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] < 0 || static_cast<std::size_t>(a[i]) >= adj.categories()) {
      throw DataError("adjustment: entry " + std::to_string(i) + " has category " +
                      std::to_string(a[i]) + ", outside 0.." +
                      std::to_string(adj.categories() - 1));
    }
    out[i] = base_predictions[i] + adj.intercept + adj.offset_for(static_cast<std::size_t>(a[i]));
  }
  return out;
}

std::vector<double> apply_adjustment(const std::vector<double>& base_predictions,
                                     const ProtectedAttribute& a, const Adjustment& adj) {
  return apply_adjustment(base_predictions, a.values(), adj);
}

BeforeAfterTable before_after_table(const DesignMatrix& x_train,
                                    const std::vector<double>& y_train,
                                    const DesignMatrix& x_adjust,
                                    const std::vector<double>& y_adjust,
                                    const ProtectedAttribute& a_adjust,
                                    const DesignMatrix& x_test, const std::vector<double>& y_test,
                                    const ProtectedAttribute& a_test,
                                    const std::vector<double>& targets,
                                    const SolverOptions& options) {
  if (targets.empty()) throw DataError("before/after table: no target levels");
  if (a_adjust.categories() != a_test.categories()) {
    throw DataError("before/after table: adjustment and test samples disagree on the category "
                    "count");
  }
  if (x_train.cols() != x_adjust.cols() || x_train.cols() != x_test.cols()) {
    throw DataError("before/after table: design column counts disagree");
  }

  BeforeAfterTable table;
  table.targets = targets;
  table.group_sizes = a_test.group_sizes();
  const std::size_t k = a_test.categories();
  table.before.assign(k, std::vector<double>(targets.size(), 0.0));
  table.after.assign(k, std::vector<double>(targets.size(), 0.0));

  for (std::size_t t = 0; t < targets.size(); ++t) {
    const QuantileLevel level(targets[t]);
    const QuantileFit base = fit(x_train, y_train, level, options);
    const std::vector<double> adjust_preds = predict(base, x_adjust);
    const Adjustment adj = fit_adjustment(adjust_preds, y_adjust, a_adjust, level.value(),
                                          options);
    const std::vector<double> test_preds = predict(base, x_test);
    const std::vector<double> corrected = apply_adjustment(test_preds, a_test, adj);
    const std::vector<double> eq_before = effective_quantiles(test_preds, y_test, a_test);
    const std::vector<double> eq_after = effective_quantiles(corrected, y_test, a_test);
    for (std::size_t g = 0; g < k; ++g) {
      table.before[g][t] = eq_before[g];
      table.after[g][t] = eq_after[g];
    }
  }
  return table;
}

FairnessReport fairness_report(const std::vector<double>& predictions,
                               const std::vector<double>& y, const ProtectedAttribute& a,
                               double tau) {
  const QuantileLevel level(tau);
  FairnessReport report;
  report.tau = level.value();
  report.effective_quantiles = effective_quantiles(predictions, y, a);
  const auto [lo, hi] =
      std::minmax_element(report.effective_quantiles.begin(), report.effective_quantiles.end());
  report.max_gap = *hi - *lo;
  report.covariance_measure = fairness_covariance(predictions, y, a);
  report.risk = empirical_risk(predictions, y, level);
  report.group_sizes = a.group_sizes();
  return report;
}

}  // namespace fairqr
