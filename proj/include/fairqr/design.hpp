#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fairqr {

// Row-major n x p design. Construction validates: all values finite,
// n >= p >= 1, and full column rank at a relative tolerance of 1e-10
// (SingularDesignError otherwise; there is no silent regularization).
// When has_intercept is set, column 0 must be identically one.
class DesignMatrix {
 public:
  DesignMatrix(std::vector<double> values, std::size_t n, std::size_t p,
               std::vector<std::string> column_names = {}, bool has_intercept = false);

  // Copies `raw` (n x p) behind a leading all-ones column.
  static DesignMatrix with_intercept(const double* raw, std::size_t n, std::size_t p,
                                     std::vector<std::string> column_names = {});

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return p_; }
  const double* data() const { return values_.data(); }
  const double* row(std::size_t i) const { return values_.data() + i * p_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * p_ + j]; }
  bool has_intercept() const { return has_intercept_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  double max_abs() const { return max_abs_; }

 private:
  std::vector<double> values_;
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<std::string> column_names_;
  bool has_intercept_ = false;
  double max_abs_ = 0.0;
};

}  // namespace fairqr
