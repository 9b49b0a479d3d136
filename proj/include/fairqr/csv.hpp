#pragma once

// File ingestion: comma-separated tables with a required header row, '.'
// decimals and no quoting, plus the flat key=value run configuration format.
// Rows containing blank cells are dropped and counted, never imputed.

#include <cstddef>
#include <string>
#include <vector>

#include "fairqr/design.hpp"
#include "fairqr/synthetic.hpp"

namespace fairqr {

struct TabularDataset {
  DesignMatrix x;  // intercept prepended unless disabled; response and
                   // protected columns excluded
  std::vector<double> y;
  std::vector<int> a;  // empty when no protected column was designated
  std::size_t protected_categories = 0;
  std::size_t dropped_rows = 0;
  std::string response_name;
  std::string protected_name;

  bool has_protected() const { return !protected_name.empty(); }
};

// Loads a CSV table, designating one column as the response and optionally
// one as the protected attribute. Protected values must be small nonnegative
// integers; the category count is inferred as max + 1 and every category
// below it must appear. Errors name the offending row and column.
TabularDataset load_csv(const std::string& path, const std::string& response_column,
                        const std::string& protected_column = "", bool no_intercept = false);

// Loads one numeric column: the one named `preferred` if present, otherwise
// the file's only column.
std::vector<double> load_column(const std::string& path, const std::string& preferred);

// Flat key=value file mirroring the SyntheticConfig field names
// (p, n, off_diagonal, mu_true, tau, base_seed, parameter_seed,
// same_sample_adjustment). '#' starts a comment; unknown keys are errors.
SyntheticConfig load_config(const std::string& path);

}  // namespace fairqr
