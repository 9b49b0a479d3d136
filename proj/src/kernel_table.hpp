#pragma once

// Internal dispatch table shared between the per-ISA kernel translation units.

#include <cstddef>

namespace fairqr::kernels::detail {

struct Table {
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*check_loss_sum)(const double*, double, std::size_t);
  void (*matvec)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*weighted_gram)(const double*, const double*, std::size_t, std::size_t, double*);
  void (*weighted_atv)(const double*, const double*, const double*, std::size_t, std::size_t,
                       double*);
  void (*ipm_weights)(const double*, const double*, const double*, const double*, const double*,
                      const double*, const double*, double, double*, double*, std::size_t);
  double (*step_bound)(const double*, const double*, std::size_t);
  std::size_t (*count_gt)(const double*, const double*, std::size_t);
};

// Each returns nullptr when the ISA is not compiled into this build.
const Table* avx2_table();
const Table* neon_table();

}  // namespace fairqr::kernels::detail
