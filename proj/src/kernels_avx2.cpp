// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 and is only entered through the runtime dispatch in
// kernels.cpp, so the rest of the binary stays runnable on older CPUs.
//
// Elementwise kernels (sub, axpy, ipm_weights, step_bound, count_gt) replicate
// the scalar operation order exactly and are bit-identical to the reference.
// Reductions use FMA and lane-parallel accumulators, so they agree with the
// reference only up to summation order.

#include "kernel_table.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstddef>
#include <limits>

namespace fairqr::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // mul + add (not fmadd): keeps parity with the scalar reference
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double check_loss_sum_avx2(const double* r, double tau, std::size_t n) {
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vr = _mm256_loadu_pd(r + i);
    const __m256d nonpos = _mm256_cmp_pd(vr, zero, _CMP_LE_OQ);
    const __m256d w = _mm256_sub_pd(vtau, _mm256_and_pd(nonpos, one));
    acc = _mm256_fmadd_pd(w, vr, acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += (r[i] <= 0.0 ? tau - 1.0 : tau) * r[i];
  return out;
}

void matvec_avx2(const double* x, std::size_t n, std::size_t p, const double* beta, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x + i * p;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= p; j += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(beta + j), acc);
    double s = hsum(acc);
    for (; j < p; ++j) s += row[j] * beta[j];
    out[i] = s;
  }
}

void weighted_gram_avx2(const double* x, const double* w, std::size_t n, std::size_t p,
                        double* g) {
  for (std::size_t j = 0; j < p * p; ++j) g[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x + i * p;
    for (std::size_t j = 0; j < p; ++j) {
      const double wj = w[i] * row[j];
      const __m256d vwj = _mm256_set1_pd(wj);
      double* grow = g + j * p;
      std::size_t k = j;
      for (; k + 4 <= p; k += 4) {
        const __m256d acc =
            _mm256_fmadd_pd(vwj, _mm256_loadu_pd(row + k), _mm256_loadu_pd(grow + k));
        _mm256_storeu_pd(grow + k, acc);
      }
      for (; k < p; ++k) grow[k] += wj * row[k];
    }
  }
  for (std::size_t j = 1; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) g[j * p + k] = g[k * p + j];
}

void weighted_atv_avx2(const double* x, const double* w, const double* v, std::size_t n,
                       std::size_t p, double* out) {
  for (std::size_t j = 0; j < p; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = w[i] * v[i];
    const __m256d vc = _mm256_set1_pd(c);
    const double* row = x + i * p;
    std::size_t j = 0;
    for (; j + 4 <= p; j += 4) {
      const __m256d acc = _mm256_fmadd_pd(vc, _mm256_loadu_pd(row + j), _mm256_loadu_pd(out + j));
      _mm256_storeu_pd(out + j, acc);
    }
    for (; j < p; ++j) out[j] += c * row[j];
  }
}

void ipm_weights_avx2(const double* u, const double* v, const double* s, const double* a,
                      const double* r, const double* cu, const double* cv, double mu, double* d,
                      double* q, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vu = _mm256_loadu_pd(u + i);
    const __m256d vv = _mm256_loadu_pd(v + i);
    const __m256d vs = _mm256_loadu_pd(s + i);
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d ratio = _mm256_add_pd(_mm256_div_pd(vu, vs), _mm256_div_pd(vv, va));
    _mm256_storeu_pd(d + i, _mm256_div_pd(one, ratio));
    const __m256d tu = cu ? _mm256_loadu_pd(cu + i) : zero;
    const __m256d tv = cv ? _mm256_loadu_pd(cv + i) : zero;
    const __m256d t1 = _mm256_div_pd(_mm256_sub_pd(vmu, tu), vs);
    const __m256d t2 = _mm256_div_pd(_mm256_sub_pd(vmu, tv), va);
    _mm256_storeu_pd(q + i, _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(r + i), t1), t2));
  }
  for (; i < n; ++i) {
    d[i] = 1.0 / (u[i] / s[i] + v[i] / a[i]);
    const double tu = cu ? cu[i] : 0.0;
    const double tv = cv ? cv[i] : 0.0;
    q[i] = r[i] - (mu - tu) / s[i] + (mu - tv) / a[i];
  }
}

double step_bound_avx2(const double* x, const double* dx, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  const __m256d vinf = _mm256_set1_pd(inf);
  const __m256d zero = _mm256_setzero_pd();
  __m256d best = vinf;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vdx = _mm256_loadu_pd(dx + i);
    const __m256d neg = _mm256_cmp_pd(vdx, zero, _CMP_LT_OQ);
    const __m256d ratio = _mm256_div_pd(_mm256_sub_pd(zero, _mm256_loadu_pd(x + i)), vdx);
    best = _mm256_min_pd(best, _mm256_blendv_pd(vinf, ratio, neg));
  }
  __m128d lo = _mm256_castpd256_pd128(best);
  __m128d hi = _mm256_extractf128_pd(best, 1);
  lo = _mm_min_pd(lo, hi);
  double bound = _mm_cvtsd_f64(_mm_min_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) {
    if (dx[i] < 0.0) {
      const double ratio = -x[i] / dx[i];
      if (ratio < bound) bound = ratio;
    }
  }
  return bound;
}

std::size_t count_gt_avx2(const double* y, const double* t, std::size_t n) {
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask =
        _mm256_cmp_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(t + i), _CMP_GT_OQ);
    c += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(mask)));
  }
  for (; i < n; ++i) c += y[i] > t[i] ? 1 : 0;
  return c;
}

constexpr Table kAvx2Table = {
    sub_avx2,          axpy_avx2,       dot_avx2,          sum_avx2,
    check_loss_sum_avx2, matvec_avx2,   weighted_gram_avx2, weighted_atv_avx2,
    ipm_weights_avx2,  step_bound_avx2, count_gt_avx2,
};

}  // namespace

const Table* avx2_table() { return &kAvx2Table; }

}  // namespace fairqr::kernels::detail

#else

namespace fairqr::kernels::detail {
const Table* avx2_table() { return nullptr; }
}  // namespace fairqr::kernels::detail

#endif
