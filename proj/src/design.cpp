#include "fairqr/design.hpp"

#include <cmath>
#include <utility>

#include "fairqr/errors.hpp"

namespace fairqr {

namespace {

// Modified Gram-Schmidt rank probe on a column copy. A column whose residual
// norm after projection drops below rel_tol times its original norm (or an
// absolute floor for zero columns) flags the design as rank deficient.
void check_full_rank(const std::vector<double>& values, std::size_t n, std::size_t p,
                     const std::vector<std::string>& names) {
  constexpr double rel_tol = 1e-10;
  std::vector<std::vector<double>> q;
  q.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> col(n);
    double norm0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = values[i * p + j];
      norm0 += col[i] * col[i];
    }
    norm0 = std::sqrt(norm0);
    for (const auto& prev : q) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += prev[i] * col[i];
      for (std::size_t i = 0; i < n; ++i) col[i] -= proj * prev[i];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += col[i] * col[i];
    norm = std::sqrt(norm);
    if (norm <= rel_tol * norm0 || norm0 == 0.0)
      throw SingularDesignError("design column '" + names[j] +
                                "' is linearly dependent on earlier columns");
    for (std::size_t i = 0; i < n; ++i) col[i] /= norm;
    q.push_back(std::move(col));
  }
}

}  // namespace

DesignMatrix::DesignMatrix(std::vector<double> values, std::size_t n, std::size_t p,
                           std::vector<std::string> column_names, bool has_intercept)
    : values_(std::move(values)), n_(n), p_(p), column_names_(std::move(column_names)),
      has_intercept_(has_intercept) {
  if (p_ < 1) throw DataError("design needs at least one column");
  if (n_ < p_) throw DataError("design needs at least as many rows as columns");
  if (values_.size() != n_ * p_) throw DataError("design storage does not match its shape");
  if (column_names_.empty()) {
    column_names_.reserve(p_);
    for (std::size_t j = 0; j < p_; ++j) {
      if (j == 0 && has_intercept_)
        column_names_.emplace_back("intercept");
      else
        column_names_.emplace_back("x" + std::to_string(has_intercept_ ? j : j + 1));
    }
  }
  if (column_names_.size() != p_) throw DataError("design column name count does not match shape");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DataError("design contains a non-finite value");
    const double a = std::fabs(v);
    if (a > max_abs_) max_abs_ = a;
  }
  if (has_intercept_) {
    for (std::size_t i = 0; i < n_; ++i)
      if (values_[i * p_] != 1.0)
        throw DataError("intercept column must be identically one");
  }
  check_full_rank(values_, n_, p_, column_names_);
}

DesignMatrix DesignMatrix::with_intercept(const double* raw, std::size_t n, std::size_t p,
                                          std::vector<std::string> column_names) {
  std::vector<double> values((p + 1) * n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i * (p + 1)] = 1.0;
    for (std::size_t j = 0; j < p; ++j) values[i * (p + 1) + 1 + j] = raw[i * p + j];
  }
  std::vector<std::string> names;
  if (!column_names.empty()) {
    names.reserve(p + 1);
    names.emplace_back("intercept");
    for (auto& c : column_names) names.push_back(std::move(c));
  }
  return DesignMatrix(std::move(values), n, p + 1, std::move(names), true);
}

}  // namespace fairqr
