#include "fairqr/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "fairqr/errors.hpp"
#include "fairqr/fairness.hpp"

namespace fairqr {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t data_row, const std::string& column,
                    const std::string& path) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError(path + ": row " + std::to_string(data_row) + ", column \"" + column +
                    "\": cannot parse \"" + field + "\" as a number");
  }
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // only complete rows
  std::size_t dropped = 0;
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  RawTable table;
  table.header = split_fields(line);
  if (table.header.size() == 1 && table.header[0].empty()) {
    throw DataError(path + ": empty header row");
  }
  for (const auto& name : table.header) {
    if (name.empty()) throw DataError(path + ": header contains an empty column name");
  }

  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;  // ignore trailing blank lines
    ++data_row;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw DataError(path + ": row " + std::to_string(data_row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    const bool blank = std::any_of(fields.begin(), fields.end(),
                                   [](const std::string& f) { return f.empty(); });
    if (blank) {
      ++table.dropped;
      continue;
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = parse_number(fields[j], data_row, table.header[j], path);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) {
    throw DataError(path + ": no usable data rows (" + std::to_string(table.dropped) +
                    " dropped for blank cells)");
  }
  return table;
}

std::size_t column_index(const RawTable& table, const std::string& name,
                         const std::string& path) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw DataError(path + ": missing column \"" + name + "\"");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

}  // namespace

TabularDataset load_csv(const std::string& path, const std::string& response_column,
                        const std::string& protected_column, bool no_intercept) {
  if (response_column.empty()) throw DataError("load: response column name is empty");
  const RawTable table = read_table(path);
  const std::size_t n = table.rows.size();
  const std::size_t response = column_index(table, response_column, path);
  const bool has_protected = !protected_column.empty();
  std::size_t protected_idx = 0;
  if (has_protected) {
    protected_idx = column_index(table, protected_column, path);
    if (protected_idx == response) {
      throw DataError(path + ": response and protected columns are both \"" + response_column +
                      "\"");
    }
  }

  std::vector<std::size_t> design_cols;
  std::vector<std::string> design_names;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == response || (has_protected && j == protected_idx)) continue;
    design_cols.push_back(j);
    design_names.push_back(table.header[j]);
  }

  std::vector<double> y(n);
  std::vector<int> a;
  for (std::size_t i = 0; i < n; ++i) y[i] = table.rows[i][response];

  std::size_t categories = 0;
  if (has_protected) {
    a.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = table.rows[i][protected_idx];
      if (!(v >= 0.0) || v != std::floor(v) || v > 1e6) {
        throw DataError(path + ": row " + std::to_string(i + 1) + ", column \"" +
                        protected_column + "\": protected values must be small nonnegative "
                        "integers, got " + std::to_string(v));
      }
      a[i] = static_cast<int>(v);
      categories = std::max(categories, static_cast<std::size_t>(a[i]) + 1);
    }
    // Validates that at least two categories exist and none below the
    // inferred count is empty.
    const ProtectedAttribute check(a, categories);
    (void)check;
  }

  const std::size_t p_raw = design_cols.size();
  std::vector<double> raw(n * p_raw);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p_raw; ++j) raw[i * p_raw + j] = table.rows[i][design_cols[j]];
  }

  TabularDataset ds{
      no_intercept
          ? DesignMatrix(std::move(raw), n, p_raw, std::move(design_names))
          : DesignMatrix::with_intercept(raw.data(), n, p_raw, std::move(design_names)),
      std::move(y),
      std::move(a),
      categories,
      table.dropped,
      response_column,
      has_protected ? protected_column : ""};
  return ds;
}

std::vector<double> load_column(const std::string& path, const std::string& preferred) {
  const RawTable table = read_table(path);
  std::size_t idx = 0;
  const auto it = std::find(table.header.begin(), table.header.end(), preferred);
  if (it != table.header.end()) {
    idx = static_cast<std::size_t>(it - table.header.begin());
  } else if (table.header.size() != 1) {
    throw DataError(path + ": expected a column named \"" + preferred +
                    "\" or a single-column file");
  }
  std::vector<double> out(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) out[i] = table.rows[i][idx];
  return out;
}

SyntheticConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  SyntheticConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": expected key = value");
    }

    const auto parse_u64 = [&](const char* what) {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw DataError(path + ": line " + std::to_string(line_no) + ": cannot parse \"" +
                        value + "\" as " + what);
      }
      return v;
    };
    const auto parse_real = [&]() {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw DataError(path + ": line " + std::to_string(line_no) + ": cannot parse \"" +
                        value + "\" as a number");
      }
      return v;
    };
    const auto parse_bool = [&]() {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw DataError(path + ": line " + std::to_string(line_no) + ": cannot parse \"" + value +
                      "\" as a boolean");
    };

    if (key == "p") {
      config.p = static_cast<std::size_t>(parse_u64("an integer"));
    } else if (key == "n") {
      config.n = static_cast<std::size_t>(parse_u64("an integer"));
    } else if (key == "off_diagonal") {
      config.off_diagonal = parse_real();
    } else if (key == "mu_true") {
      config.mu_true = parse_real();
    } else if (key == "tau") {
      config.tau = parse_real();
    } else if (key == "base_seed") {
      config.base_seed = parse_u64("a seed");
    } else if (key == "parameter_seed") {
      config.parameter_seed = parse_u64("a seed");
    } else if (key == "same_sample_adjustment") {
      config.same_sample_adjustment = parse_bool();
    } else {
      throw DataError(path + ": line " + std::to_string(line_no) + ": unknown key \"" + key +
                      "\"");
    }
  }
  config.validate();
  return config;
}

}  // namespace fairqr
