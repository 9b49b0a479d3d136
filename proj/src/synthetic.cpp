#include "fairqr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "fairqr/errors.hpp"
#include "fairqr/kernels.hpp"
#include "fairqr/linalg.hpp"
#include "fairqr/oracle.hpp"
#include "fairqr/quantile.hpp"
#include "fairqr/rng.hpp"

namespace fairqr {
namespace {

constexpr std::uint64_t kCovariateStream = 1;
constexpr std::uint64_t kAttributeStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::vector<std::string> covariate_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

// Row slice [lo, hi) of the raw covariates plus attribute and response.
struct Slice {
  std::vector<double> x;
  std::vector<int> a;
  std::vector<double> y;
  std::size_t n = 0;
  std::size_t p = 0;
};

Slice slice_rows(const SyntheticDataset& ds, std::size_t lo, std::size_t hi) {
  Slice s;
  s.n = hi - lo;
  s.p = ds.x.cols();
  s.x.assign(ds.x.data() + lo * s.p, ds.x.data() + hi * s.p);
  s.a.assign(ds.a.begin() + static_cast<std::ptrdiff_t>(lo),
             ds.a.begin() + static_cast<std::ptrdiff_t>(hi));
  s.y.assign(ds.y.begin() + static_cast<std::ptrdiff_t>(lo),
             ds.y.begin() + static_cast<std::ptrdiff_t>(hi));
  return s;
}

// [intercept, x1..xp]
DesignMatrix excluded_design(const Slice& s) {
  return DesignMatrix::with_intercept(s.x.data(), s.n, s.p, covariate_names(s.p));
}

// [intercept, a, x1..xp]
DesignMatrix full_design(const Slice& s) {
  const std::size_t cols = s.p + 2;
  std::vector<double> values(s.n * cols);
  for (std::size_t i = 0; i < s.n; ++i) {
    values[i * cols] = 1.0;
    values[i * cols + 1] = static_cast<double>(s.a[i]);
    for (std::size_t j = 0; j < s.p; ++j) values[i * cols + 2 + j] = s.x[i * s.p + j];
  }
  std::vector<std::string> names;
  names.reserve(cols);
  names.emplace_back("intercept");
  names.emplace_back("a");
  for (auto& name : covariate_names(s.p)) names.push_back(std::move(name));
  return DesignMatrix(std::move(values), s.n, cols, std::move(names), /*has_intercept=*/true);
}

EstimatorMetrics evaluate_estimator(const std::vector<double>& predictions, const Slice& heldout,
                                    QuantileLevel tau) {
  const ProtectedAttribute attr = ProtectedAttribute::binary(heldout.a);
  EstimatorMetrics m;
  m.effective_quantiles = effective_quantiles(predictions, heldout.y, attr);
  m.gap = std::fabs(m.effective_quantiles[1] - m.effective_quantiles[0]);
  m.group_mean_residuals.assign(attr.categories(), 0.0);
  for (std::size_t i = 0; i < heldout.n; ++i) {
    m.group_mean_residuals[static_cast<std::size_t>(heldout.a[i])] +=
        heldout.y[i] - predictions[i];
  }
  for (std::size_t k = 0; k < attr.categories(); ++k) {
    m.group_mean_residuals[k] /= static_cast<double>(attr.group_sizes()[k]);
  }
  m.risk = empirical_risk(predictions, heldout.y, tau);
  m.exceedance = static_cast<double>(kernels::count_gt(heldout.y.data(), predictions.data(),
                                                       heldout.n)) /
                 static_cast<double>(heldout.n);
  return m;
}

TrialDetail run_trial_impl(const SyntheticConfig& config, std::size_t trial_index, double tau,
                           bool with_grid) {
  config.validate();
  const QuantileLevel level(tau);

  const SyntheticParameters params = draw_parameters(config);
  const SyntheticDataset ds =
      generate(config, config.base_seed ^ static_cast<std::uint64_t>(trial_index), params);

  const std::size_t n_train = config.n / 2;
  const std::size_t base_rows = config.same_sample_adjustment ? n_train : n_train / 2;
  if (base_rows < config.p + 2 || n_train < config.p + 3) {
    throw DataError("trial protocol: training split of " + std::to_string(base_rows) +
                    " rows cannot support " + std::to_string(config.p) +
                    " covariates; increase n");
  }

  const Slice train = slice_rows(ds, 0, n_train);
  const Slice heldout = slice_rows(ds, n_train, config.n);
  const DesignMatrix heldout_excluded = excluded_design(heldout);

  TrialDetail detail;
  detail.result.trial_index = trial_index;
  detail.n_train = n_train;

  // Estimator 1: response on attribute and covariates.
  const QuantileFit fit_full = fit(full_design(train), train.y, level);
  detail.result.full =
      evaluate_estimator(predict(fit_full, full_design(heldout)), heldout, level);

  // Estimator 2: attribute excluded.
  const QuantileFit fit_excluded = fit(excluded_design(train), train.y, level);
  detail.result.excluded =
      evaluate_estimator(predict(fit_excluded, heldout_excluded), heldout, level);

  // Estimator 3: excluded base plus the per-group correction. By default the
  // base is refitted on the first part of the training half and the
  // correction uses the remainder, so the adjustment sample is disjoint from
  // everything the base fit saw.
  const Slice adjust = config.same_sample_adjustment ? train
                                                     : slice_rows(ds, base_rows, n_train);
  QuantileFit base_fit_storage;
  const QuantileFit* base_fit = &fit_excluded;
  if (!config.same_sample_adjustment) {
    const Slice base = slice_rows(ds, 0, base_rows);
    base_fit_storage = fit(excluded_design(base), base.y, level);
    base_fit = &base_fit_storage;
  }
  detail.n_adjust = adjust.n;

  const std::vector<double> adjust_base = predict(*base_fit, excluded_design(adjust));
  const Adjustment adj = fit_adjustment(adjust_base, adjust.y,
                                        ProtectedAttribute::binary(adjust.a), level.value());
  const std::vector<double> heldout_base = predict(*base_fit, heldout_excluded);
  const std::vector<double> corrected = apply_adjustment(heldout_base, heldout.a, adj);
  detail.result.corrected = evaluate_estimator(corrected, heldout, level);

  if (with_grid) {
    std::vector<double> residuals(heldout.n);
    kernels::sub(heldout.y.data(), heldout_base.data(), residuals.data(), heldout.n);
    const GridBest best = grid_best_adjustment(residuals, heldout.a, level.value(),
                                               GridSpec::cover(residuals));
    detail.grid_best_risk = best.risk;
    detail.grid_best_mu = best.mu;
    detail.grid_best_nu = best.nu;
  }
  return detail;
}

double ols_log_slope(const std::vector<std::size_t>& ns, const std::vector<double>& means) {
  const std::size_t k = ns.size();
  std::vector<double> xs(k);
  std::vector<double> ys(k);
  for (std::size_t i = 0; i < k; ++i) {
    xs[i] = std::log(static_cast<double>(ns[i]));
    // A mean gap of exactly zero would need every trial perfectly balanced;
    // clamp so the log stays finite if it ever happens.
    ys[i] = std::log(std::max(means[i], 1e-300));
  }
  const double xbar = kernels::sum(xs.data(), k) / static_cast<double>(k);
  const double ybar = kernels::sum(ys.data(), k) / static_cast<double>(k);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
  }
  return sxy / sxx;
}

GapSummary summarize_gaps(const std::vector<double>& gaps) {
  GapSummary s;
  s.mean = kernels::sum(gaps.data(), gaps.size()) / static_cast<double>(gaps.size());
  s.q05 = sample_quantile(gaps, 0.05);
  s.q25 = sample_quantile(gaps, 0.25);
  s.median = sample_quantile(gaps, 0.50);
  s.q75 = sample_quantile(gaps, 0.75);
  s.q95 = sample_quantile(gaps, 0.95);
  return s;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (p < 1) throw DataError("config: covariate count must be at least 1");
  if (n < 4 || n % 2 != 0) {
    throw DataError("config: n must be even and at least 4, got " + std::to_string(n));
  }
  if (!std::isfinite(off_diagonal) || off_diagonal >= 1.0 ||
      (p > 1 && off_diagonal <= -1.0 / static_cast<double>(p - 1))) {
    throw DataError("config: off-diagonal must lie in (-1/(p-1), 1) for a positive definite "
                    "covariance");
  }
  if (!std::isfinite(mu_true)) throw DataError("config: group effect must be finite");
  const QuantileLevel level(tau);
  (void)level;
}

SyntheticParameters draw_parameters(const SyntheticConfig& config) {
  config.validate();
  CounterRng rng(config.parameter_seed);
  SyntheticParameters params;
  params.beta.resize(config.p);
  params.gamma.resize(config.p);
  params.eta.resize(config.p);
  for (auto& v : params.beta) v = rng.next_normal();
  for (auto& v : params.gamma) v = rng.next_normal();
  for (auto& v : params.eta) v = rng.next_normal();
  return params;
}

SyntheticDataset generate(const SyntheticConfig& config, std::uint64_t seed,
                          const SyntheticParameters& params) {
  config.validate();
  const std::size_t n = config.n;
  const std::size_t p = config.p;
  if (params.beta.size() != p || params.gamma.size() != p || params.eta.size() != p) {
    throw DataError("generate: parameter vectors must have length p = " + std::to_string(p));
  }

  // Cholesky factor of the equicorrelated covariance.
  std::vector<double> sigma(p * p, config.off_diagonal);
  for (std::size_t j = 0; j < p; ++j) sigma[j * p + j] = 1.0;
  if (!linalg::cholesky(sigma.data(), p, 1e-12)) {
    throw DataError("generate: covariance is not positive definite");
  }

  CounterRng trial_rng(seed);
  CounterRng x_rng = trial_rng.derive_stream(kCovariateStream);
  CounterRng a_rng = trial_rng.derive_stream(kAttributeStream);
  CounterRng z_rng = trial_rng.derive_stream(kNoiseStream);

  std::vector<double> xvals(n * p);
  std::vector<double> z(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) z[j] = x_rng.next_normal();
    double* row = xvals.data() + i * p;
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= j; ++k) acc += sigma[j * p + k] * z[k];
      row[j] = acc;
    }
  }

  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double logit = kernels::dot(xvals.data() + i * p, params.gamma.data(), p);
    a[i] = a_rng.next_bernoulli(logistic(logit)) ? 1 : 0;
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xvals.data() + i * p;
    const double location = kernels::dot(row, params.beta.data(), p) +
                            config.mu_true * static_cast<double>(a[i]);
    const double scale = std::fabs(kernels::dot(row, params.eta.data(), p));
    y[i] = location + scale * z_rng.next_normal();
  }

  return SyntheticDataset{DesignMatrix(std::move(xvals), n, p, covariate_names(p)),
                          std::move(a), std::move(y)};
}

SyntheticDataset generate(const SyntheticConfig& config, std::uint64_t seed) {
  return generate(config, seed, draw_parameters(config));
}

TrialResult run_trial(const SyntheticConfig& config, std::size_t trial_index, double tau) {
  return run_trial_impl(config, trial_index, tau, /*with_grid=*/false).result;
}

TrialDetail run_trial_detail(const SyntheticConfig& config, std::size_t trial_index, double tau) {
  return run_trial_impl(config, trial_index, tau, /*with_grid=*/true);
}

ExperimentSummary run_experiment(const SyntheticConfig& config, std::size_t trials, double tau) {
  config.validate();
  if (trials < 1) throw DataError("experiment: at least one trial required");

  ExperimentSummary summary;
  summary.config = config;
  summary.trials = trials;

  std::vector<double> gaps_full;
  std::vector<double> gaps_excluded;
  std::vector<double> gaps_corrected;
  gaps_full.reserve(trials);
  gaps_excluded.reserve(trials);
  gaps_corrected.reserve(trials);

  for (std::size_t t = 0; t < trials; ++t) {
    try {
      const TrialResult r = run_trial(config, t, tau);
      gaps_full.push_back(r.full.gap);
      gaps_excluded.push_back(r.excluded.gap);
      gaps_corrected.push_back(r.corrected.gap);
    } catch (const Error& e) {
      summary.failed_trials.push_back(t);
      if (summary.first_failure.empty()) {
        summary.first_failure = "trial " + std::to_string(t) + ": " + e.what();
      }
    }
  }
  if (gaps_full.empty()) {
    throw DataError("experiment: every trial failed; first failure: " + summary.first_failure);
  }

  summary.full = summarize_gaps(gaps_full);
  summary.excluded = summarize_gaps(gaps_excluded);
  summary.corrected = summarize_gaps(gaps_corrected);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* gaps : {&gaps_full, &gaps_excluded, &gaps_corrected}) {
    for (double g : *gaps) {
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;

  constexpr std::size_t kBins = 50;
  summary.histogram_edges.resize(kBins + 1);
  for (std::size_t b = 0; b <= kBins; ++b) {
    summary.histogram_edges[b] =
        lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(kBins);
  }
  const auto fill = [&](const std::vector<double>& gaps, std::vector<std::size_t>& counts) {
    counts.assign(kBins, 0);
    for (double g : gaps) {
      auto b = static_cast<std::size_t>((g - lo) / (hi - lo) * static_cast<double>(kBins));
      if (b >= kBins) b = kBins - 1;
      ++counts[b];
    }
  };
  fill(gaps_full, summary.histogram_full);
  fill(gaps_excluded, summary.histogram_excluded);
  fill(gaps_corrected, summary.histogram_corrected);
  return summary;
}

RateReport rate_study(const SyntheticConfig& config, const std::vector<std::size_t>& n_grid,
                      std::size_t trials_per_n, double tau) {
  config.validate();
  if (n_grid.size() < 3) throw DataError("rate study: need at least 3 sample sizes");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) {
      throw DataError("rate study: sample sizes must be strictly increasing");
    }
  }
  if (trials_per_n < 1) throw DataError("rate study: at least one trial per sample size");

  RateReport report;
  report.config = config;
  report.trials_per_n = trials_per_n;

  std::vector<double> mean_full;
  std::vector<double> mean_excluded;
  std::vector<double> mean_corrected;
  for (std::size_t n : n_grid) {
    SyntheticConfig c = config;
    c.n = n;
    double sum_full = 0.0;
    double sum_excluded = 0.0;
    double sum_corrected = 0.0;
    double sum_dev = 0.0;
    for (std::size_t t = 0; t < trials_per_n; ++t) {
      const TrialResult r = run_trial(c, t, tau);
      sum_full += r.full.gap;
      sum_excluded += r.excluded.gap;
      sum_corrected += r.corrected.gap;
      sum_dev += std::fabs(r.corrected.exceedance - (1.0 - tau));
    }
    const auto den = static_cast<double>(trials_per_n);
    RatePoint point;
    point.n = n;
    point.mean_gap_full = sum_full / den;
    point.mean_gap_excluded = sum_excluded / den;
    point.mean_gap_corrected = sum_corrected / den;
    point.mean_faithfulness_dev = sum_dev / den;
    report.points.push_back(point);
    mean_full.push_back(point.mean_gap_full);
    mean_excluded.push_back(point.mean_gap_excluded);
    mean_corrected.push_back(point.mean_gap_corrected);
  }

  report.slope_full = ols_log_slope(n_grid, mean_full);
  report.slope_excluded = ols_log_slope(n_grid, mean_excluded);
  report.slope_corrected = ols_log_slope(n_grid, mean_corrected);
  return report;
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("sample quantile of an empty vector");
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("sample quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + (values[lo + 1] - values[lo]) * frac;
}

FixtureTable birthweight_fixture(std::size_t rows, std::uint64_t seed, double group_effect) {
  if (rows == 0) throw DataError("fixture: at least one row required");
  if (!std::isfinite(group_effect)) throw DataError("fixture: group effect must be finite");

  FixtureTable table;
  table.columns = {"weight",       "black",           "boy",
                   "married",      "age",             "age2",
                   "ed_hs",        "ed_smcol",        "ed_col",
                   "prenatal_none", "prenatal_second", "prenatal_third",
                   "smoke",        "cigsper",         "gain",
                   "gain2"};
  const std::size_t cols = table.columns.size();
  table.rows = rows;
  table.values.assign(rows * cols, 0.0);

  CounterRng rng(seed);
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = table.values.data() + i * cols;
    const double black = rng.next_bernoulli(0.4) ? 1.0 : 0.0;
    const double boy = rng.next_bernoulli(0.51) ? 1.0 : 0.0;
    const double married = rng.next_bernoulli(0.7 - 0.15 * black) ? 1.0 : 0.0;
    const double age = 18.0 + 22.0 * rng.next_unit();
    const double edu = rng.next_unit();
    const double ed_hs = (edu >= 0.30 && edu < 0.65) ? 1.0 : 0.0;
    const double ed_smcol = (edu >= 0.65 && edu < 0.85) ? 1.0 : 0.0;
    const double ed_col = edu >= 0.85 ? 1.0 : 0.0;
    const double pren = rng.next_unit();
    const double prenatal_none = pren < 0.04 ? 1.0 : 0.0;
    const double prenatal_second = (pren >= 0.04 && pren < 0.22) ? 1.0 : 0.0;
    const double prenatal_third = (pren >= 0.22 && pren < 0.30) ? 1.0 : 0.0;
    const double smoke = rng.next_bernoulli(0.14 + 0.04 * black) ? 1.0 : 0.0;
    const double cigsper = smoke == 1.0 ? std::floor(3.0 + 17.0 * rng.next_unit()) : 0.0;
    const double gain = 30.0 + 12.0 * rng.next_normal();
    const double scale = 350.0 + 6.0 * cigsper + 2.0 * std::fabs(gain - 30.0);
    const double weight = 3300.0 + 120.0 * boy + 70.0 * married + 30.0 * ed_hs +
                          60.0 * ed_smcol + 90.0 * ed_col - 180.0 * prenatal_none -
                          60.0 * prenatal_second - 40.0 * prenatal_third - 160.0 * smoke -
                          6.0 * cigsper + 7.0 * gain - 0.05 * gain * gain + 14.0 * age -
                          0.22 * age * age - group_effect * black + scale * rng.next_normal();
    row[0] = weight;
    row[1] = black;
    row[2] = boy;
    row[3] = married;
    row[4] = age;
    row[5] = age * age;
    row[6] = ed_hs;
    row[7] = ed_smcol;
    row[8] = ed_col;
    row[9] = prenatal_none;
    row[10] = prenatal_second;
    row[11] = prenatal_third;
    row[12] = smoke;
    row[13] = cigsper;
    row[14] = gain;
    row[15] = gain * gain;
  }
  return table;
}

}  // namespace fairqr
