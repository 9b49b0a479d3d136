#pragma once

// Seeded generative benchmark: correlated covariates, a binary protected
// attribute drawn from a logistic model, a heteroscedastic response with a
// planted group effect, and the three-estimator trial protocol (full,
// attribute-excluded, excluded-plus-correction) evaluated on heldout halves.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fairqr/design.hpp"
#include "fairqr/fairness.hpp"

namespace fairqr {

struct SyntheticConfig {
  std::size_t p = 20;           // covariate count
  std::size_t n = 1000;         // sample size per trial, split in halves
  double off_diagonal = 0.3;    // covariate covariance off-diagonal entry
  double mu_true = 3.0;         // planted protected-group effect
  double tau = 0.5;             // target quantile level
  std::uint64_t base_seed = 20260816ull;
  std::uint64_t parameter_seed = 42ull;
  // When true the correction is fitted on the same sample as its base fit;
  // by default the training half is split again so the adjustment sees data
  // the base fit never touched.
  bool same_sample_adjustment = false;

  void validate() const;
  bool operator==(const SyntheticConfig&) const = default;
};

// Model coefficients drawn once from parameter_seed and shared by all trials.
struct SyntheticParameters {
  std::vector<double> beta;   // response coefficients
  std::vector<double> gamma;  // attribute logistic coefficients
  std::vector<double> eta;    // heteroscedastic scale coefficients
};

struct SyntheticDataset {
  DesignMatrix x;          // n x p raw covariate draws, no intercept column
  std::vector<int> a;      // binary protected attribute
  std::vector<double> y;   // response
};

SyntheticParameters draw_parameters(const SyntheticConfig& config);

// X rows are N(0, Sigma) with unit diagonal and constant off-diagonal,
// A | X ~ Bernoulli(logistic(x . gamma)), and
// Y = x . beta + mu_true * A + |x . eta| * Z with Z standard normal.
// Deterministic in (config, seed, params); the covariates, attribute and
// noise use separate derived streams so each is reproducible in isolation.
SyntheticDataset generate(const SyntheticConfig& config, std::uint64_t seed,
                          const SyntheticParameters& params);
SyntheticDataset generate(const SyntheticConfig& config, std::uint64_t seed);

struct EstimatorMetrics {
  double gap = 0.0;                          // |tau_hat(1) - tau_hat(0)| on heldout
  std::vector<double> effective_quantiles;   // per group, heldout
  std::vector<double> group_mean_residuals;  // mean of y - prediction per group
  double risk = 0.0;                         // heldout mean check loss
  double exceedance = 0.0;                   // heldout fraction with y > prediction

  bool operator==(const EstimatorMetrics&) const = default;
};

struct TrialResult {
  std::size_t trial_index = 0;
  EstimatorMetrics full;
  EstimatorMetrics excluded;
  EstimatorMetrics corrected;

  bool operator==(const TrialResult&) const = default;
};

// TrialResult plus the heldout grid oracle for the corrected estimator's
// base fit, for risk-dominance checks.
struct TrialDetail {
  TrialResult result;
  double grid_best_risk = 0.0;   // 101 x 101 exhaustive (mu, nu) search
  double grid_best_mu = 0.0;
  double grid_best_nu = 0.0;
  std::size_t n_train = 0;       // training half size
  std::size_t n_adjust = 0;      // adjustment sample size
};

// One trial: generate with per-trial seed base_seed ^ trial_index, fit the
// three estimators on the training half, evaluate on the heldout half.
TrialResult run_trial(const SyntheticConfig& config, std::size_t trial_index, double tau);
TrialDetail run_trial_detail(const SyntheticConfig& config, std::size_t trial_index, double tau);

struct GapSummary {
  double mean = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;

  bool operator==(const GapSummary&) const = default;
};

struct ExperimentSummary {
  SyntheticConfig config;
  std::size_t trials = 0;  // requested trial count
  GapSummary full;
  GapSummary excluded;
  GapSummary corrected;
  std::vector<double> histogram_edges;       // 51 edges, pooled gap range
  std::vector<std::size_t> histogram_full;   // 50 counts per estimator
  std::vector<std::size_t> histogram_excluded;
  std::vector<std::size_t> histogram_corrected;
  std::vector<std::size_t> failed_trials;    // indices of trials that threw
  std::string first_failure;                 // first error message, if any

  bool operator==(const ExperimentSummary&) const = default;
};

// Sequential deterministic fold over trial indices 0..trials-1. Failed
// trials are collected, not fatal, unless every trial fails.
ExperimentSummary run_experiment(const SyntheticConfig& config, std::size_t trials, double tau);

struct RatePoint {
  std::size_t n = 0;
  double mean_gap_full = 0.0;
  double mean_gap_excluded = 0.0;
  double mean_gap_corrected = 0.0;
  double mean_faithfulness_dev = 0.0;  // corrected |exceedance - (1 - tau)|

  bool operator==(const RatePoint&) const = default;
};

struct RateReport {
  SyntheticConfig config;
  std::size_t trials_per_n = 0;
  std::vector<RatePoint> points;
  double slope_full = 0.0;       // OLS slope of log mean gap on log n
  double slope_excluded = 0.0;
  double slope_corrected = 0.0;

  bool operator==(const RateReport&) const = default;
};

// Empirical convergence rates over a strictly increasing grid of at least
// three sample sizes.
RateReport rate_study(const SyntheticConfig& config, const std::vector<std::size_t>& n_grid,
                      std::size_t trials_per_n, double tau);

// Order statistic with linear interpolation (the common type-7 rule).
double sample_quantile(std::vector<double> values, double q);

// Synthetic stand-in for the classic birthweight analysis table: response
// "weight" in grams, binary "black" as the protected attribute, and 14
// maternal and infant covariates (indicators, counts, and quadratic terms).
// group_effect grams are subtracted from rows with black = 1, planting a
// group disparity the correction procedure should remove. Deterministic in
// (rows, seed, group_effect).
struct FixtureTable {
  std::vector<std::string> columns;
  std::vector<double> values;  // row-major, rows x columns.size()
  std::size_t rows = 0;
};

FixtureTable birthweight_fixture(std::size_t rows, std::uint64_t seed, double group_effect);

}  // namespace fairqr
