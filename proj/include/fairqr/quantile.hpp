#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairqr/design.hpp"

namespace fairqr {

// Quantile level, validated to lie strictly inside (0, 1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau);
  double value() const { return tau_; }

 private:
  double tau_;
};

struct SolverOptions {
  // Relative duality gap at which the interior-point loop stops.
  double duality_gap_tol = 1e-8;
  // A residual counts as interpolated below this times max(1, |Y|_inf).
  double residual_zero_tol = 1e-8;
  int max_iterations = 100;

  void validate() const;  // throws DataError on nonpositive entries
};

struct QuantileFit {
  std::vector<double> beta;
  double tau = 0.0;
  // Dual solution: regression rank scores, one per observation, in [0, 1].
  // Off basis they equal the residual-sign indicator.
  std::vector<double> rank_scores;
  // Indices with |residual| at or below the interpolation threshold, ascending.
  std::vector<std::size_t> basis;
  double duality_gap = 0.0;  // achieved relative gap
  int iterations = 0;
  double primal_objective = 0.0;  // total check loss at beta
  // More interpolated rows than columns, or the score repair had to clamp.
  bool degenerate = false;

  bool operator==(const QuantileFit&) const = default;
};

struct RankScoreResult {
  std::vector<double> scores;
  bool degenerate = false;
  // sup-norm violation of X^T b = (1 - tau) X^T 1 after clamping
  double feasibility_gap = 0.0;
};

struct QuantileProcess {
  std::vector<double> taus;
  std::vector<QuantileFit> fits;

  bool operator==(const QuantileProcess&) const = default;
};

// rho_tau(u): (tau - 1) u for u <= 0, tau u for u > 0. Throws on non-finite u.
double check_loss(double u, QuantileLevel tau);

// Mean check loss of y - prediction. Lengths must match and be nonzero.
double empirical_risk(std::span<const double> predictions, std::span<const double> y,
                      QuantileLevel tau);

// Linear quantile regression. Solves the LP through a primal-dual
// interior-point loop with Mehrotra predictor-corrector steps, then snaps to
// the best interpolating vertex found near the optimum. Deterministic for
// identical inputs and options. Throws ConvergenceError when max_iterations
// is exhausted above the gap tolerance.
QuantileFit fit(const DesignMatrix& x, std::span<const double> y, QuantileLevel tau,
                const SolverOptions& options = {});

// Fitted values on a new design with the same column count.
std::vector<double> predict(const QuantileFit& fit, const DesignMatrix& x);

// Rank-score repair at a fitted coefficient vector: off-basis entries are the
// residual-sign indicator, basis entries solve the dual equality constraints
// in the minimum-norm sense, and everything is clamped to [0, 1]. A repair
// that cannot reach feasibility flags the result degenerate instead of
// throwing.
RankScoreResult refine_rank_scores(const QuantileFit& fit, const DesignMatrix& x,
                                   std::span<const double> y, const SolverOptions& options = {});

// 19 levels, 0.05 through 0.95.
std::vector<double> default_tau_grid();

// Independent fits over a strictly increasing grid of levels.
QuantileProcess quantile_process(const DesignMatrix& x, std::span<const double> y,
                                 std::span<const double> taus, const SolverOptions& options = {});

}  // namespace fairqr
