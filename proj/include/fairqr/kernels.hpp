#pragma once

// Data-parallel inner loops shared by the solver, the fairness metrics and the
// benchmark harness. The scalar versions are the reference semantics; the AVX2
// (x86-64) and NEON (aarch64) variants are selected once at startup from CPU
// capabilities and must match the reference exactly for elementwise kernels
// and up to summation order for reductions (tests/test_kernels.cpp).

#include <cstddef>
#include <string>

namespace fairqr::kernels {

enum class Backend { scalar, avx2, neon };

// Backend in effect for all kernel calls. Resolved once from the CPU.
Backend active_backend();
std::string backend_name(Backend b);

// Test hooks. force_backend throws DataError when the requested backend is
// not compiled in or not supported by this CPU. Not thread safe.
void force_backend(Backend b);
void reset_backend();

// out = a - b
void sub(const double* a, const double* b, double* out, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);

double sum(const double* x, std::size_t n);

// sum_i rho_tau(r[i]) with rho_tau(u) = u * (tau - [u <= 0])
double check_loss_sum(const double* r, double tau, std::size_t n);

// out[i] = <row_i(X), beta> for row-major X (n x p)
void matvec(const double* x, std::size_t n, std::size_t p, const double* beta, double* out);

// g (p x p, row-major) = sum_i w[i] * x_i x_i^T; symmetric, fully filled
void weighted_gram(const double* x, const double* w, std::size_t n, std::size_t p, double* g);

// out (p) = sum_i w[i] * v[i] * x_i
void weighted_atv(const double* x, const double* w, const double* v, std::size_t n,
                  std::size_t p, double* out);

// Elementwise interior-point quantities:
//   d[i] = 1 / (u[i]/s[i] + v[i]/a[i])
//   q[i] = r[i] - (mu - cu[i])/s[i] + (mu - cv[i])/a[i]
// cu and cv may be null and are then treated as zero (predictor step).
void ipm_weights(const double* u, const double* v, const double* s, const double* a,
                 const double* r, const double* cu, const double* cv, double mu,
                 double* d, double* q, std::size_t n);

// max alpha >= 0 with x + alpha * dx >= 0 componentwise; +inf when unconstrained
double step_bound(const double* x, const double* dx, std::size_t n);

// #{ i : y[i] > t[i] }
std::size_t count_gt(const double* y, const double* t, std::size_t n);

}  // namespace fairqr::kernels
