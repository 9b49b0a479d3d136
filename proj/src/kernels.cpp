#include "fairqr/kernels.hpp"

#include <limits>

#include "fairqr/errors.hpp"
#include "kernel_table.hpp"

namespace fairqr::kernels {

namespace {

// ---------------------------------------------------------------------------
// Scalar reference kernels. Everything else in the library is defined to agree
// with these.
// ---------------------------------------------------------------------------

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double check_loss_sum_scalar(const double* r, double tau, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = r[i] <= 0.0 ? tau - 1.0 : tau;
    acc += w * r[i];
  }
  return acc;
}

void matvec_scalar(const double* x, std::size_t n, std::size_t p, const double* beta,
                   double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x + i * p;
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) acc += row[j] * beta[j];
    out[i] = acc;
  }
}

void weighted_gram_scalar(const double* x, const double* w, std::size_t n, std::size_t p,
                          double* g) {
  for (std::size_t j = 0; j < p * p; ++j) g[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x + i * p;
    for (std::size_t j = 0; j < p; ++j) {
      const double wj = w[i] * row[j];
      double* grow = g + j * p;
      for (std::size_t k = j; k < p; ++k) grow[k] += wj * row[k];
    }
  }
  // mirror the upper triangle
  for (std::size_t j = 1; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) g[j * p + k] = g[k * p + j];
}

void weighted_atv_scalar(const double* x, const double* w, const double* v, std::size_t n,
                         std::size_t p, double* out) {
  for (std::size_t j = 0; j < p; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = w[i] * v[i];
    const double* row = x + i * p;
    for (std::size_t j = 0; j < p; ++j) out[j] += c * row[j];
  }
}

void ipm_weights_scalar(const double* u, const double* v, const double* s, const double* a,
                        const double* r, const double* cu, const double* cv, double mu, double* d,
                        double* q, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = 1.0 / (u[i] / s[i] + v[i] / a[i]);
    const double tu = cu ? cu[i] : 0.0;
    const double tv = cv ? cv[i] : 0.0;
    q[i] = r[i] - (mu - tu) / s[i] + (mu - tv) / a[i];
  }
}

double step_bound_scalar(const double* x, const double* dx, std::size_t n) {
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (dx[i] < 0.0) {
      const double ratio = -x[i] / dx[i];
      if (ratio < bound) bound = ratio;
    }
  }
  return bound;
}

std::size_t count_gt_scalar(const double* y, const double* t, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += y[i] > t[i] ? 1 : 0;
  return c;
}

constexpr detail::Table kScalarTable = {
    sub_scalar,          axpy_scalar,         dot_scalar,        sum_scalar,
    check_loss_sum_scalar, matvec_scalar,     weighted_gram_scalar, weighted_atv_scalar,
    ipm_weights_scalar,  step_bound_scalar,   count_gt_scalar,
};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Active {
  const detail::Table* table;
  Backend backend;
};

Active detect() {
  if (const detail::Table* t = detail::neon_table()) return {t, Backend::neon};
  if (cpu_has_avx2()) {
    if (const detail::Table* t = detail::avx2_table()) return {t, Backend::avx2};
  }
  return {&kScalarTable, Backend::scalar};
}

Active g_active = detect();

}  // namespace

Backend active_backend() { return g_active.backend; }

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

void force_backend(Backend b) {
  switch (b) {
    case Backend::scalar:
      g_active = {&kScalarTable, Backend::scalar};
      return;
    case Backend::avx2:
      if (!cpu_has_avx2() || !detail::avx2_table())
        throw DataError("avx2 kernels unavailable on this machine");
      g_active = {detail::avx2_table(), Backend::avx2};
      return;
    case Backend::neon:
      if (!detail::neon_table()) throw DataError("neon kernels unavailable on this machine");
      g_active = {detail::neon_table(), Backend::neon};
      return;
  }
  throw DataError("unknown kernel backend");
}

void reset_backend() { g_active = detect(); }

void sub(const double* a, const double* b, double* out, std::size_t n) {
  g_active.table->sub(a, b, out, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  g_active.table->axpy(alpha, x, y, n);
}
double dot(const double* a, const double* b, std::size_t n) { return g_active.table->dot(a, b, n); }
double sum(const double* x, std::size_t n) { return g_active.table->sum(x, n); }
double check_loss_sum(const double* r, double tau, std::size_t n) {
  return g_active.table->check_loss_sum(r, tau, n);
}
void matvec(const double* x, std::size_t n, std::size_t p, const double* beta, double* out) {
  g_active.table->matvec(x, n, p, beta, out);
}
void weighted_gram(const double* x, const double* w, std::size_t n, std::size_t p, double* g) {
  g_active.table->weighted_gram(x, w, n, p, g);
}
void weighted_atv(const double* x, const double* w, const double* v, std::size_t n, std::size_t p,
                  double* out) {
  g_active.table->weighted_atv(x, w, v, n, p, out);
}
void ipm_weights(const double* u, const double* v, const double* s, const double* a,
                 const double* r, const double* cu, const double* cv, double mu, double* d,
                 double* q, std::size_t n) {
  g_active.table->ipm_weights(u, v, s, a, r, cu, cv, mu, d, q, n);
}
double step_bound(const double* x, const double* dx, std::size_t n) {
  return g_active.table->step_bound(x, dx, n);
}
std::size_t count_gt(const double* y, const double* t, std::size_t n) {
  return g_active.table->count_gt(y, t, n);
}

}  // namespace fairqr::kernels
