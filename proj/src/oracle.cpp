#include "fairqr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fairqr/errors.hpp"
#include "fairqr/kernels.hpp"
#include "fairqr/linalg.hpp"
#include "fairqr/quantile.hpp"

namespace fairqr {
namespace {

constexpr std::size_t kMaxRows = 14;
constexpr std::size_t kMaxCols = 3;

// Advances a strictly increasing index tuple to its lexicographic successor
// among p-subsets of {0..n-1}; returns false after the last subset.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t p = idx.size();
  for (std::size_t j = p; j-- > 0;) {
    if (idx[j] + (p - j) < n) {
      ++idx[j];
      for (std::size_t k = j + 1; k < p; ++k) idx[k] = idx[k - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

OracleFit brute_force_fit(const DesignMatrix& x, const std::vector<double>& y, double tau) {
  const QuantileLevel level(tau);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) {
    throw DataError("brute_force_fit: response has " + std::to_string(y.size()) +
                    " entries for " + std::to_string(n) + " design rows");
  }
  if (n > kMaxRows || p > kMaxCols) {
    throw SizeGuardError("brute_force_fit is limited to n <= " + std::to_string(kMaxRows) +
                         ", p <= " + std::to_string(kMaxCols) + "; got n = " + std::to_string(n) +
                         ", p = " + std::to_string(p));
  }

  const double pivot_tol = 1e-12 * (1.0 + x.max_abs());
  std::vector<std::size_t> idx(p);
  for (std::size_t j = 0; j < p; ++j) idx[j] = j;

  std::vector<double> sub(p * p);
  std::vector<double> rhs(p);
  std::vector<double> beta(p);
  std::vector<double> pred(n);
  std::vector<double> residual(n);
  std::vector<std::size_t> piv(p);

  OracleFit best;
  best.loss = std::numeric_limits<double>::infinity();
  bool found = false;

  do {
    for (std::size_t i = 0; i < p; ++i) {
      rhs[i] = y[idx[i]];
      for (std::size_t j = 0; j < p; ++j) sub[i * p + j] = x(idx[i], j);
    }
    if (!linalg::lu_factor(sub.data(), p, piv.data(), pivot_tol)) continue;
    linalg::lu_solve(sub.data(), piv.data(), p, rhs.data(), beta.data());
    kernels::matvec(x.data(), n, p, beta.data(), pred.data());
    kernels::sub(y.data(), pred.data(), residual.data(), n);
    const double loss = kernels::check_loss_sum(residual.data(), level.value(), n);
    if (!found || loss < best.loss) {
      best.beta = beta;
      best.loss = loss;
      best.basis = idx;
      found = true;
    }
  } while (next_combination(idx, n));

  if (!found) {
    throw SingularDesignError("brute_force_fit: no invertible " + std::to_string(p) +
                              "-row subset exists");
  }
  return best;
}

GridSpec GridSpec::cover(const std::vector<double>& residuals, std::size_t mu_count,
                         std::size_t nu_count) {
  if (residuals.empty()) throw DataError("grid cover: empty residual vector");
  const auto [lo_it, hi_it] = std::minmax_element(residuals.begin(), residuals.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw DataError("grid cover: residuals contain non-finite values");
  }
  double span = hi - lo;
  if (span <= 0.0) span = 1.0;
  GridSpec g;
  g.mu_min = -span;
  g.mu_max = span;
  g.nu_min = lo - span;
  g.nu_max = hi + span;
  g.mu_count = mu_count;
  g.nu_count = nu_count;
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (mu_count == 0 || nu_count == 0) throw DataError("grid spec: zero grid points");
  if (!(mu_min <= mu_max) || !(nu_min <= nu_max)) {
    throw DataError("grid spec: inverted range");
  }
  if (!std::isfinite(mu_min) || !std::isfinite(mu_max) || !std::isfinite(nu_min) ||
      !std::isfinite(nu_max)) {
    throw DataError("grid spec: non-finite range");
  }
}

GridBest grid_best_adjustment(const std::vector<double>& residuals, const std::vector<int>& a,
                              double tau, const GridSpec& grid) {
  const QuantileLevel level(tau);
  grid.validate();
  const std::size_t n = residuals.size();
  if (n == 0) throw DataError("grid_best_adjustment: empty residual vector");
  if (a.size() != n) {
    throw DataError("grid_best_adjustment: group vector has " + std::to_string(a.size()) +
                    " entries for " + std::to_string(n) + " residuals");
  }

  // The loss separates over groups: group 0 sees r - nu, group 1 sees
  // r - mu - nu. Group 0's per-nu losses are shared across all mu rows; the
  // sweep itself stays fully exhaustive over the mu x nu grid.
  std::vector<double> r0;
  std::vector<double> r1;
  r0.reserve(n);
  r1.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != 0 && a[i] != 1) {
      throw DataError("grid_best_adjustment: group vector must be binary, entry " +
                      std::to_string(i) + " is " + std::to_string(a[i]));
    }
    if (a[i] == 0) {
      r0.push_back(residuals[i]);
    } else {
      r1.push_back(residuals[i]);
    }
  }

  const auto shift_at = [](double lo, double hi, std::size_t count, std::size_t k) {
    if (count == 1) return lo;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  };
  const auto group_loss = [&](const std::vector<double>& r, double shift) {
    double acc = 0.0;
    for (double v : r) {
      const double u = v - shift;
      acc += u * (u <= 0.0 ? level.value() - 1.0 : level.value());
    }
    return acc;
  };

  // Loss of group 0 at every nu value.
  std::vector<double> loss0(grid.nu_count);
  for (std::size_t k = 0; k < grid.nu_count; ++k) {
    loss0[k] = group_loss(r0, shift_at(grid.nu_min, grid.nu_max, grid.nu_count, k));
  }

  GridBest best;
  best.risk = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.mu_count; ++j) {
    const double mu = shift_at(grid.mu_min, grid.mu_max, grid.mu_count, j);
    for (std::size_t k = 0; k < grid.nu_count; ++k) {
      const double nu = shift_at(grid.nu_min, grid.nu_max, grid.nu_count, k);
      const double total = loss0[k] + group_loss(r1, mu + nu);
      const double risk = total / static_cast<double>(n);
      if (risk < best.risk) {
        best.mu = mu;
        best.nu = nu;
        best.risk = risk;
      }
    }
  }
  return best;
}

}  // namespace fairqr
