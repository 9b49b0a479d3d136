#include "fairqr/linalg.hpp"

#include <cmath>

namespace fairqr::linalg {

bool cholesky(double* a, std::size_t p, double eps) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > eps)) return false;
    const double root = std::sqrt(d);
    a[j * p + j] = root;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / root;
    }
  }
  return true;
}

void cholesky_solve(const double* l, std::size_t p, const double* b, double* x) {
  // forward: L z = b
  for (std::size_t i = 0; i < p; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * x[k];
    x[i] = s / l[i * p + i];
  }
  // backward: L^T x = z
  for (std::size_t ii = p; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < p; ++k) s -= l[k * p + ii] * x[k];
    x[ii] = s / l[ii * p + ii];
  }
}

bool lu_factor(double* a, std::size_t p, std::size_t* piv, double tol) {
  for (std::size_t j = 0; j < p; ++j) piv[j] = j;
  for (std::size_t j = 0; j < p; ++j) {
    std::size_t pivot = j;
    double best = std::fabs(a[j * p + j]);
    for (std::size_t i = j + 1; i < p; ++i) {
      const double cand = std::fabs(a[i * p + j]);
      if (cand > best) {
        best = cand;
        pivot = i;
      }
    }
    if (!(best > tol)) return false;
    if (pivot != j) {
      for (std::size_t k = 0; k < p; ++k) {
        const double tmp = a[j * p + k];
        a[j * p + k] = a[pivot * p + k];
        a[pivot * p + k] = tmp;
      }
      const std::size_t tmp = piv[j];
      piv[j] = piv[pivot];
      piv[pivot] = tmp;
    }
    const double diag = a[j * p + j];
    for (std::size_t i = j + 1; i < p; ++i) {
      const double mult = a[i * p + j] / diag;
      a[i * p + j] = mult;
      for (std::size_t k = j + 1; k < p; ++k) a[i * p + k] -= mult * a[j * p + k];
    }
  }
  return true;
}

void lu_solve(const double* lu, const std::size_t* piv, std::size_t p, const double* b, double* x) {
  for (std::size_t i = 0; i < p; ++i) {
    double s = b[piv[i]];
    for (std::size_t k = 0; k < i; ++k) s -= lu[i * p + k] * x[k];
    x[i] = s;
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < p; ++k) s -= lu[ii * p + k] * x[k];
    x[ii] = s / lu[ii * p + ii];
  }
}

bool solve_spd(const std::vector<double>& a, std::size_t p, const std::vector<double>& b,
               std::vector<double>& x) {
  std::vector<double> work = a;
  x.assign(p, 0.0);
  if (cholesky(work.data(), p)) {
    cholesky_solve(work.data(), p, b.data(), x.data());
    return true;
  }
  // Jittered retry: scaled to the matrix, grows until the factorization holds.
  double trace = 0.0;
  for (std::size_t j = 0; j < p; ++j) trace += a[j * p + j];
  double jitter = (trace > 0.0 ? trace / static_cast<double>(p) : 1.0) * 1e-14;
  for (int attempt = 0; attempt < 4; ++attempt) {
    work = a;
    for (std::size_t j = 0; j < p; ++j) work[j * p + j] += jitter;
    if (cholesky(work.data(), p)) {
      cholesky_solve(work.data(), p, b.data(), x.data());
      return true;
    }
    jitter *= 100.0;
  }
  return false;
}

}  // namespace fairqr::linalg
