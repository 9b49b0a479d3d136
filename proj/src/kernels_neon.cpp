// NEON kernel variants for aarch64, where ASIMD is baseline so no runtime CPU
// check is needed. Mirrors kernels_avx2.cpp: elementwise kernels replicate the
// scalar operation order exactly, reductions may reassociate.

#include "kernel_table.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstddef>
#include <limits>

namespace fairqr::kernels::detail {

namespace {

void sub_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double check_loss_sum_neon(const double* r, double tau, std::size_t n) {
  const float64x2_t vtau = vdupq_n_f64(tau);
  const float64x2_t vtaum1 = vdupq_n_f64(tau - 1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vr = vld1q_f64(r + i);
    const uint64x2_t nonpos = vcleq_f64(vr, zero);
    const float64x2_t w = vbslq_f64(nonpos, vtaum1, vtau);
    acc = vfmaq_f64(acc, w, vr);
  }
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) out += (r[i] <= 0.0 ? tau - 1.0 : tau) * r[i];
  return out;
}

void matvec_neon(const double* x, std::size_t n, std::size_t p, const double* beta, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x + i * p;
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= p; j += 2) acc = vfmaq_f64(acc, vld1q_f64(row + j), vld1q_f64(beta + j));
    double s = vaddvq_f64(acc);
    for (; j < p; ++j) s += row[j] * beta[j];
    out[i] = s;
  }
}

void weighted_gram_neon(const double* x, const double* w, std::size_t n, std::size_t p,
                        double* g) {
  for (std::size_t j = 0; j < p * p; ++j) g[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x + i * p;
    for (std::size_t j = 0; j < p; ++j) {
      const double wj = w[i] * row[j];
      const float64x2_t vwj = vdupq_n_f64(wj);
      double* grow = g + j * p;
      std::size_t k = j;
      for (; k + 2 <= p; k += 2)
        vst1q_f64(grow + k, vfmaq_f64(vld1q_f64(grow + k), vwj, vld1q_f64(row + k)));
      for (; k < p; ++k) grow[k] += wj * row[k];
    }
  }
  for (std::size_t j = 1; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) g[j * p + k] = g[k * p + j];
}

void weighted_atv_neon(const double* x, const double* w, const double* v, std::size_t n,
                       std::size_t p, double* out) {
  for (std::size_t j = 0; j < p; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = w[i] * v[i];
    const float64x2_t vc = vdupq_n_f64(c);
    const double* row = x + i * p;
    std::size_t j = 0;
    for (; j + 2 <= p; j += 2)
      vst1q_f64(out + j, vfmaq_f64(vld1q_f64(out + j), vc, vld1q_f64(row + j)));
    for (; j < p; ++j) out[j] += c * row[j];
  }
}

void ipm_weights_neon(const double* u, const double* v, const double* s, const double* a,
                      const double* r, const double* cu, const double* cv, double mu, double* d,
                      double* q, std::size_t n) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t vmu = vdupq_n_f64(mu);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vu = vld1q_f64(u + i);
    const float64x2_t vv = vld1q_f64(v + i);
    const float64x2_t vs = vld1q_f64(s + i);
    const float64x2_t va = vld1q_f64(a + i);
    const float64x2_t ratio = vaddq_f64(vdivq_f64(vu, vs), vdivq_f64(vv, va));
    vst1q_f64(d + i, vdivq_f64(one, ratio));
    const float64x2_t tu = cu ? vld1q_f64(cu + i) : zero;
    const float64x2_t tv = cv ? vld1q_f64(cv + i) : zero;
    const float64x2_t t1 = vdivq_f64(vsubq_f64(vmu, tu), vs);
    const float64x2_t t2 = vdivq_f64(vsubq_f64(vmu, tv), va);
    vst1q_f64(q + i, vaddq_f64(vsubq_f64(vld1q_f64(r + i), t1), t2));
  }
  for (; i < n; ++i) {
    d[i] = 1.0 / (u[i] / s[i] + v[i] / a[i]);
    const double tu = cu ? cu[i] : 0.0;
    const double tv = cv ? cv[i] : 0.0;
    q[i] = r[i] - (mu - tu) / s[i] + (mu - tv) / a[i];
  }
}

double step_bound_neon(const double* x, const double* dx, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  const float64x2_t vinf = vdupq_n_f64(inf);
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t best = vinf;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vdx = vld1q_f64(dx + i);
    const uint64x2_t neg = vcltq_f64(vdx, zero);
    const float64x2_t ratio = vdivq_f64(vnegq_f64(vld1q_f64(x + i)), vdx);
    best = vminq_f64(best, vbslq_f64(neg, ratio, vinf));
  }
  double bound = vgetq_lane_f64(best, 0);
  const double lane1 = vgetq_lane_f64(best, 1);
  if (lane1 < bound) bound = lane1;
  for (; i < n; ++i) {
    if (dx[i] < 0.0) {
      const double ratio = -x[i] / dx[i];
      if (ratio < bound) bound = ratio;
    }
  }
  return bound;
}

std::size_t count_gt_neon(const double* y, const double* t, std::size_t n) {
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t mask = vcgtq_f64(vld1q_f64(y + i), vld1q_f64(t + i));
    c += (vgetq_lane_u64(mask, 0) & 1u) + (vgetq_lane_u64(mask, 1) & 1u);
  }
  for (; i < n; ++i) c += y[i] > t[i] ? 1 : 0;
  return c;
}

constexpr Table kNeonTable = {
    sub_neon,          axpy_neon,       dot_neon,          sum_neon,
    check_loss_sum_neon, matvec_neon,   weighted_gram_neon, weighted_atv_neon,
    ipm_weights_neon,  step_bound_neon, count_gt_neon,
};

}  // namespace

const Table* neon_table() { return &kNeonTable; }

}  // namespace fairqr::kernels::detail

#else

namespace fairqr::kernels::detail {
const Table* neon_table() { return nullptr; }
}  // namespace fairqr::kernels::detail

#endif
