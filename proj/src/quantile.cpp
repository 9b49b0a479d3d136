#include "fairqr/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fairqr/errors.hpp"
#include "fairqr/kernels.hpp"
#include "fairqr/linalg.hpp"

namespace fairqr {

namespace {

double linf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) {
    const double a = std::fabs(x);
    if (a > m) m = a;
  }
  return m;
}

double response_scale(std::span<const double> y) { return std::max(1.0, linf(y)); }

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DataError(std::string(what) + " contains a non-finite value");
}

std::vector<std::size_t> interpolated_rows(std::span<const double> r, double ztol) {
  std::vector<std::size_t> basis;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (std::fabs(r[i]) <= ztol) basis.push_back(i);
  return basis;
}

// Shared rank-score repair. beta has x.cols() entries; r is y - x beta.
RankScoreResult refine_impl(const DesignMatrix& x, std::span<const double> y,
                            std::span<const double> r, double tau, const SolverOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const double ztol = options.residual_zero_tol * response_scale(y);
  const std::vector<std::size_t> basis = interpolated_rows(r, ztol);

  RankScoreResult out;
  out.scores.assign(n, 0.0);
  std::vector<char> in_basis(n, 0);
  for (std::size_t i : basis) in_basis[i] = 1;
  for (std::size_t i = 0; i < n; ++i)
    if (!in_basis[i]) out.scores[i] = r[i] > 0.0 ? 1.0 : 0.0;

  // rhs = (1 - tau) X^T 1 - X^T (off-basis indicators)
  std::vector<double> ones(n, 1.0);
  std::vector<double> target(p), rhs(p);
  kernels::weighted_atv(x.data(), ones.data(), ones.data(), n, p, target.data());
  kernels::weighted_atv(x.data(), ones.data(), out.scores.data(), n, p, rhs.data());
  for (std::size_t j = 0; j < p; ++j) rhs[j] = (1.0 - tau) * target[j] - rhs[j];

  bool solve_failed = false;
  if (!basis.empty()) {
    const std::size_t m = basis.size();
    std::vector<double> rows(m * p);
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t j = 0; j < p; ++j) rows[k * p + j] = x(basis[k], j);
    // Minimum-norm solution of X_h^T b_h = rhs: b_h = X_h w with (X_h^T X_h) w = rhs.
    std::vector<double> ones_m(m, 1.0), gram(p * p), w;
    kernels::weighted_gram(rows.data(), ones_m.data(), m, p, gram.data());
    if (linalg::solve_spd(gram, p, rhs, w)) {
      for (std::size_t k = 0; k < m; ++k)
        out.scores[basis[k]] = kernels::dot(rows.data() + k * p, w.data(), p);
    } else {
      // No usable repair; leave the basis entries at the centered default.
      for (std::size_t k = 0; k < m; ++k) out.scores[basis[k]] = 1.0 - tau;
      solve_failed = true;
    }
  }
  for (double& b : out.scores) b = std::clamp(b, 0.0, 1.0);

  std::vector<double> achieved(p);
  kernels::weighted_atv(x.data(), ones.data(), out.scores.data(), n, p, achieved.data());
  double gap = 0.0;
  for (std::size_t j = 0; j < p; ++j)
    gap = std::max(gap, std::fabs(achieved[j] - (1.0 - tau) * target[j]));
  out.feasibility_gap = gap;

  const double feas_tol =
      options.duality_gap_tol * static_cast<double>(n) * std::max(1.0, x.max_abs());
  out.degenerate = solve_failed || basis.size() > p || gap > feas_tol;
  return out;
}

struct PivotRow {
  std::vector<double> reduced;
  std::size_t pivot_col;
};

// Greedy selection of p linearly independent rows, preferring small |residual|.
std::vector<std::size_t> select_vertex_rows(const DesignMatrix& x, std::span<const double> r) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::fabs(r[i]) < std::fabs(r[j]);
  });
  const double indep_tol = 1e-9 * (1.0 + x.max_abs());
  std::vector<PivotRow> pivots;
  std::vector<std::size_t> chosen;
  std::vector<double> work(p);
  for (std::size_t idx : order) {
    if (chosen.size() == p) break;
    for (std::size_t j = 0; j < p; ++j) work[j] = x(idx, j);
    for (const PivotRow& pr : pivots) {
      const double factor = work[pr.pivot_col] / pr.reduced[pr.pivot_col];
      if (factor != 0.0)
        for (std::size_t j = 0; j < p; ++j) work[j] -= factor * pr.reduced[j];
    }
    std::size_t best_col = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double a = std::fabs(work[j]);
      if (a > best) {
        best = a;
        best_col = j;
      }
    }
    if (best > indep_tol) {
      pivots.push_back({work, best_col});
      chosen.push_back(idx);
    }
  }
  return chosen;
}

}  // namespace

QuantileLevel::QuantileLevel(double tau) : tau_(tau) {
  if (!(std::isfinite(tau) && tau > 0.0 && tau < 1.0))
    throw DataError("quantile level must lie strictly inside (0, 1)");
}

void SolverOptions::validate() const {
  if (!(duality_gap_tol > 0.0)) throw DataError("duality_gap_tol must be positive");
  if (!(residual_zero_tol > 0.0)) throw DataError("residual_zero_tol must be positive");
  if (max_iterations < 1) throw DataError("max_iterations must be at least 1");
}

double check_loss(double u, QuantileLevel tau) {
  if (!std::isfinite(u)) throw DataError("check loss needs a finite argument");
  const double t = tau.value();
  return (u <= 0.0 ? t - 1.0 : t) * u;
}

double empirical_risk(std::span<const double> predictions, std::span<const double> y,
                      QuantileLevel tau) {
  if (predictions.size() != y.size())
    throw DataError("prediction and response lengths differ");
  if (y.empty()) throw DataError("empirical risk needs at least one observation");
  require_finite(predictions, "prediction");
  require_finite(y, "response");
  const std::size_t n = y.size();
  std::vector<double> r(n);
  kernels::sub(y.data(), predictions.data(), r.data(), n);
  return kernels::check_loss_sum(r.data(), tau.value(), n) / static_cast<double>(n);
}

QuantileFit fit(const DesignMatrix& x, std::span<const double> y, QuantileLevel tau_level,
                const SolverOptions& options) {
  options.validate();
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) throw DataError("response length does not match design rows");
  require_finite(y, "response");
  const double tau = tau_level.value();
  const double yscale = response_scale(y);
  const double* xd = x.data();

  // Dual iterate a in (0,1)^n with slack s = 1 - a; primal multipliers (beta, u, v)
  // with u - v tracking the residual. a = (1 - tau) 1 satisfies the dual equality
  // constraints exactly at the start.
  std::vector<double> beta(p, 0.0), a(n, 1.0 - tau), s(n, tau), u(n), v(n);
  std::vector<double> pred(n), r(n), d(n), q(n), da(n), ds(n), du(n), dv(n);
  std::vector<double> da_aff(n), ds_aff(n), du_aff(n), dv_aff(n), cu(n), cv(n);
  std::vector<double> gram(p * p), factor(p * p), rhs(p), dbeta(p), xdb(n);
  std::vector<double> ones(n, 1.0), target(p), xta(p);

  kernels::weighted_atv(xd, ones.data(), ones.data(), n, p, target.data());
  for (std::size_t j = 0; j < p; ++j) target[j] *= 1.0 - tau;

  // Start from least squares.
  kernels::weighted_gram(xd, ones.data(), n, p, gram.data());
  kernels::weighted_atv(xd, ones.data(), y.data(), n, p, rhs.data());
  if (!linalg::solve_spd(gram, p, rhs, beta))
    throw SingularDesignError("normal equations are singular despite the rank check");
  kernels::matvec(xd, n, p, beta.data(), pred.data());
  kernels::sub(y.data(), pred.data(), r.data(), n);
  const double abs_sum = 2.0 * kernels::check_loss_sum(r.data(), 0.5, n);
  const double delta =
      std::max({abs_sum / (2.0 * static_cast<double>(n)), 1e-4 * yscale, 1e-12});
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = std::max(r[i], 0.0) + delta;
    v[i] = std::max(-r[i], 0.0) + delta;
  }

  const double dual_const = (1.0 - tau) * kernels::sum(y.data(), n);
  const double gap_tol = options.duality_gap_tol;
  constexpr double snap_tol = 1e-13;  // vertex certificate target, see polish below
  constexpr double step_damp = 0.9995;

  double primal = kernels::check_loss_sum(r.data(), tau, n);
  double relgap = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  int bonus = 0;

  auto refresh_gap = [&]() {
    kernels::matvec(xd, n, p, beta.data(), pred.data());
    kernels::sub(y.data(), pred.data(), r.data(), n);
    primal = kernels::check_loss_sum(r.data(), tau, n);
    const double dual_obj = kernels::dot(y.data(), a.data(), n) - dual_const;
    relgap = (primal - dual_obj) / (1.0 + std::fabs(primal));
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    refresh_gap();
    if (relgap <= snap_tol) {
      converged = true;
      break;
    }
    if (relgap <= gap_tol) {
      converged = true;
      // A few extra centering steps sharpen the gap so the vertex snap below
      // lands on an exactly optimal basis.
      if (++bonus > 8) break;
    }

    kernels::ipm_weights(u.data(), v.data(), s.data(), a.data(), r.data(), nullptr, nullptr, 0.0,
                         d.data(), q.data(), n);
    kernels::weighted_gram(xd, d.data(), n, p, gram.data());
    factor = gram;
    if (!linalg::cholesky(factor.data(), p)) {
      double trace = 0.0;
      for (std::size_t j = 0; j < p; ++j) trace += gram[j * p + j];
      double jitter = (trace > 0.0 ? trace / static_cast<double>(p) : 1.0) * 1e-14;
      bool ok = false;
      for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
        factor = gram;
        for (std::size_t j = 0; j < p; ++j) factor[j * p + j] += jitter;
        ok = linalg::cholesky(factor.data(), p);
        jitter *= 100.0;
      }
      if (!ok) break;  // numerical floor; converged flag decides below
    }

    // equality residual of the dual iterate
    kernels::weighted_atv(xd, ones.data(), a.data(), n, p, xta.data());

    auto solve_direction = [&](const double* cu_ptr, const double* cv_ptr, double mu,
                               std::vector<double>& out_da, std::vector<double>& out_ds,
                               std::vector<double>& out_du, std::vector<double>& out_dv) {
      kernels::ipm_weights(u.data(), v.data(), s.data(), a.data(), r.data(), cu_ptr, cv_ptr, mu,
                           d.data(), q.data(), n);
      kernels::weighted_atv(xd, d.data(), q.data(), n, p, rhs.data());
      for (std::size_t j = 0; j < p; ++j) rhs[j] -= target[j] - xta[j];
      linalg::cholesky_solve(factor.data(), p, rhs.data(), dbeta.data());
      kernels::matvec(xd, n, p, dbeta.data(), xdb.data());
      for (std::size_t i = 0; i < n; ++i) {
        out_da[i] = d[i] * (q[i] - xdb[i]);
        out_ds[i] = -out_da[i];
        const double tu = cu_ptr ? cu_ptr[i] : 0.0;
        const double tv = cv_ptr ? cv_ptr[i] : 0.0;
        out_du[i] = (mu - tu) / s[i] - u[i] + u[i] / s[i] * out_da[i];
        out_dv[i] = (mu - tv) / a[i] - v[i] - v[i] / a[i] * out_da[i];
      }
    };

    // predictor
    solve_direction(nullptr, nullptr, 0.0, da_aff, ds_aff, du_aff, dv_aff);
    const double bp_aff = std::min(kernels::step_bound(a.data(), da_aff.data(), n),
                                   kernels::step_bound(s.data(), ds_aff.data(), n));
    const double bd_aff = std::min(kernels::step_bound(u.data(), du_aff.data(), n),
                                   kernels::step_bound(v.data(), dv_aff.data(), n));
    const double ap_aff = std::min(1.0, bp_aff);
    const double ad_aff = std::min(1.0, bd_aff);
    const double gap = kernels::dot(u.data(), s.data(), n) + kernels::dot(v.data(), a.data(), n);
    double gap_aff = gap;
    gap_aff += ap_aff * (kernels::dot(u.data(), ds_aff.data(), n) +
                         kernels::dot(v.data(), da_aff.data(), n));
    gap_aff += ad_aff * (kernels::dot(du_aff.data(), s.data(), n) +
                         kernels::dot(dv_aff.data(), a.data(), n));
    gap_aff += ap_aff * ad_aff * (kernels::dot(du_aff.data(), ds_aff.data(), n) +
                                  kernels::dot(dv_aff.data(), da_aff.data(), n));
    double sigma = gap > 0.0 ? gap_aff / gap : 0.0;
    sigma = std::clamp(sigma * sigma * sigma, 0.0, 1.0);
    const double mu = sigma * gap / (2.0 * static_cast<double>(n));

    // corrector reuses the factorization
    for (std::size_t i = 0; i < n; ++i) {
      cu[i] = du_aff[i] * ds_aff[i];
      cv[i] = dv_aff[i] * da_aff[i];
    }
    solve_direction(cu.data(), cv.data(), mu, da, ds, du, dv);

    const double bp = std::min(kernels::step_bound(a.data(), da.data(), n),
                               kernels::step_bound(s.data(), ds.data(), n));
    const double bd = std::min(kernels::step_bound(u.data(), du.data(), n),
                               kernels::step_bound(v.data(), dv.data(), n));
    const double alpha_p = std::min(1.0, step_damp * bp);
    const double alpha_d = std::min(1.0, step_damp * bd);
    if (alpha_p <= 1e-14 && alpha_d <= 1e-14) break;  // stalled

    kernels::axpy(alpha_p, da.data(), a.data(), n);
    kernels::axpy(alpha_p, ds.data(), s.data(), n);
    kernels::axpy(alpha_d, du.data(), u.data(), n);
    kernels::axpy(alpha_d, dv.data(), v.data(), n);
    kernels::axpy(alpha_d, dbeta.data(), beta.data(), p);
    ++iterations;
  }

  refresh_gap();
  if (relgap <= gap_tol) converged = true;
  if (!converged)
    throw ConvergenceError("interior-point loop exhausted max_iterations at relative gap " +
                               std::to_string(relgap),
                           relgap);

  // Vertex snap: rebuild the coefficient from the p most-interpolated
  // independent rows and keep it when it does not lose objective.
  const std::vector<std::size_t> vertex_rows = select_vertex_rows(x, r);
  if (vertex_rows.size() == p) {
    std::vector<double> xh(p * p), yh(p), beta_cand(p);
    for (std::size_t k = 0; k < p; ++k) {
      for (std::size_t j = 0; j < p; ++j) xh[k * p + j] = x(vertex_rows[k], j);
      yh[k] = y[vertex_rows[k]];
    }
    std::vector<std::size_t> piv(p);
    if (linalg::lu_factor(xh.data(), p, piv.data(), 1e-12 * (1.0 + x.max_abs()))) {
      linalg::lu_solve(xh.data(), piv.data(), p, yh.data(), beta_cand.data());
      bool finite = true;
      for (double b : beta_cand) finite = finite && std::isfinite(b);
      if (finite) {
        std::vector<double> pred_cand(n), r_cand(n);
        kernels::matvec(xd, n, p, beta_cand.data(), pred_cand.data());
        kernels::sub(y.data(), pred_cand.data(), r_cand.data(), n);
        const double primal_cand = kernels::check_loss_sum(r_cand.data(), tau, n);
        if (primal_cand <= primal) {
          beta = beta_cand;
          r = r_cand;
          primal = primal_cand;
        }
      }
    }
  }

  QuantileFit out;
  out.beta = beta;
  out.tau = tau;
  out.iterations = iterations;
  out.primal_objective = primal;
  out.basis = interpolated_rows(r, options.residual_zero_tol * yscale);

  RankScoreResult scores = refine_impl(x, y, r, tau, options);
  out.rank_scores = std::move(scores.scores);
  out.degenerate = scores.degenerate;

  const double dual_a = kernels::dot(y.data(), a.data(), n) - dual_const;
  double dual_best = dual_a;
  if (!scores.degenerate) {
    const double dual_b = kernels::dot(y.data(), out.rank_scores.data(), n) - dual_const;
    dual_best = std::max(dual_best, dual_b);
  }
  out.duality_gap = (primal - dual_best) / (1.0 + std::fabs(primal));
  return out;
}

std::vector<double> predict(const QuantileFit& fit, const DesignMatrix& x) {
  if (fit.beta.size() != x.cols())
    throw DataError("design column count does not match the fitted coefficients");
  std::vector<double> out(x.rows());
  kernels::matvec(x.data(), x.rows(), x.cols(), fit.beta.data(), out.data());
  return out;
}

RankScoreResult refine_rank_scores(const QuantileFit& fit, const DesignMatrix& x,
                                   std::span<const double> y, const SolverOptions& options) {
  options.validate();
  if (fit.beta.size() != x.cols())
    throw DataError("design column count does not match the fitted coefficients");
  if (y.size() != x.rows()) throw DataError("response length does not match design rows");
  require_finite(y, "response");
  QuantileLevel level(fit.tau);  // revalidates
  const std::size_t n = x.rows();
  std::vector<double> pred(n), r(n);
  kernels::matvec(x.data(), n, x.cols(), fit.beta.data(), pred.data());
  kernels::sub(y.data(), pred.data(), r.data(), n);
  return refine_impl(x, y, r, level.value(), options);
}

std::vector<double> default_tau_grid() {
  std::vector<double> taus(19);
  for (int i = 1; i <= 19; ++i) taus[i - 1] = static_cast<double>(i) / 20.0;
  return taus;
}

QuantileProcess quantile_process(const DesignMatrix& x, std::span<const double> y,
                                 std::span<const double> taus, const SolverOptions& options) {
  if (taus.empty()) throw DataError("quantile process needs at least one level");
  for (std::size_t k = 0; k < taus.size(); ++k) {
    QuantileLevel check(taus[k]);  // validates range
    if (k > 0 && !(taus[k] > taus[k - 1]))
      throw DataError("quantile process levels must be strictly increasing");
  }
  QuantileProcess out;
  out.taus.assign(taus.begin(), taus.end());
  out.fits.reserve(taus.size());
  for (double t : taus) {
    try {
      out.fits.push_back(fit(x, y, QuantileLevel(t), options));
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("tau=" + std::to_string(t) + ": " + e.what(), e.last_gap);
    }
  }
  return out;
}

}  // namespace fairqr
