#pragma once

// Small dense helpers for the p-by-p systems inside the solver and oracles.
// p stays below a few dozen everywhere, so these are plain row-major loops;
// the n-length work lives in the kernels module.

#include <cstddef>
#include <vector>

namespace fairqr::linalg {

// In-place lower Cholesky of the row-major symmetric matrix a (p x p).
// Returns false when a pivot falls to eps or below.
bool cholesky(double* a, std::size_t p, double eps = 0.0);

// Solves L L^T x = b given the factor from cholesky().
void cholesky_solve(const double* l, std::size_t p, const double* b, double* x);

// LU with partial pivoting, in place. piv must hold p entries. Returns false
// when the matrix is singular at tol (largest available pivot magnitude).
bool lu_factor(double* a, std::size_t p, std::size_t* piv, double tol);

void lu_solve(const double* lu, const std::size_t* piv, std::size_t p, const double* b, double* x);

// Convenience: solve the symmetric positive definite system a x = b with a
// jittered Cholesky retry. Returns false when even the jittered factorization
// fails. a and b are left untouched.
bool solve_spd(const std::vector<double>& a, std::size_t p, const std::vector<double>& b,
               std::vector<double>& x);

}  // namespace fairqr::linalg
