#pragma once

// Exhaustive reference implementations used to validate the main solver and
// the adjustment procedure at small scale. These trade all performance for
// being obviously correct, and refuse instances large enough to make
// enumeration meaningless.

#include <cstddef>
#include <vector>

#include "fairqr/design.hpp"

namespace fairqr {

struct OracleFit {
  std::vector<double> beta;
  double loss = 0.0;                 // total check loss over the full sample
  std::vector<std::size_t> basis;    // ascending indices of the p interpolated rows
};

// Enumerates every invertible p-row subset h in lexicographic order, solves
// X_h beta = Y_h exactly, scores the full-sample check loss, and returns the
// minimizer. Exact ties keep the lexicographically smallest basis (the first
// one found). Guarded to n <= 14 and p <= 3; larger instances are an error,
// never an approximation.
OracleFit brute_force_fit(const DesignMatrix& x, const std::vector<double>& y, double tau);

struct GridSpec {
  double mu_min = 0.0;
  double mu_max = 0.0;
  double nu_min = 0.0;
  double nu_max = 0.0;
  std::size_t mu_count = 101;
  std::size_t nu_count = 101;

  // Grid covering nu in [min R - span, max R + span] and mu in [-span, span],
  // with span = max R - min R (or 1.0 for constant residuals), so the best
  // affine per-group shift always lies inside the searched box.
  static GridSpec cover(const std::vector<double>& residuals, std::size_t mu_count = 101,
                        std::size_t nu_count = 101);
  void validate() const;
};

struct GridBest {
  double mu = 0.0;
  double nu = 0.0;
  double risk = 0.0;  // mean check loss of r - mu * a - nu at the best cell
};

// Exhaustive scan of the (mu, nu) grid for the smallest mean check loss of
// r_i - mu * a_i - nu. The first minimum in scan order (mu outer, nu inner)
// wins exact ties. When only one group is present mu is unidentified: every
// mu row attains the same risk and the first one is reported.
GridBest grid_best_adjustment(const std::vector<double>& residuals, const std::vector<int>& a,
                              double tau, const GridSpec& grid);

}  // namespace fairqr
