#include "fairqr/reports.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fairqr/errors.hpp"

namespace fairqr {
namespace {

using nlohmann::json;

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("json parse: ") + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

json fit_to_obj(const QuantileFit& fit) {
  return json{{"tau", fit.tau},
              {"beta", fit.beta},
              {"rank_scores", fit.rank_scores},
              {"basis", fit.basis},
              {"duality_gap", fit.duality_gap},
              {"iterations", fit.iterations},
              {"primal_objective", fit.primal_objective},
              {"degenerate", fit.degenerate}};
}

QuantileFit fit_from_obj(const json& j) {
  QuantileFit fit;
  fit.tau = j.at("tau").get<double>();
  fit.beta = j.at("beta").get<std::vector<double>>();
  fit.rank_scores = j.at("rank_scores").get<std::vector<double>>();
  fit.basis = j.at("basis").get<std::vector<std::size_t>>();
  fit.duality_gap = j.at("duality_gap").get<double>();
  fit.iterations = j.at("iterations").get<int>();
  fit.primal_objective = j.at("primal_objective").get<double>();
  fit.degenerate = j.at("degenerate").get<bool>();
  return fit;
}

json adjustment_to_obj(const Adjustment& adj) {
  return json{{"tau", adj.tau},
              {"intercept", adj.intercept},
              {"offsets", adj.offsets},
              {"reference_category", adj.reference_category}};
}

Adjustment adjustment_from_obj(const json& j) {
  Adjustment adj;
  adj.tau = j.at("tau").get<double>();
  adj.intercept = j.at("intercept").get<double>();
  adj.offsets = j.at("offsets").get<std::vector<double>>();
  adj.reference_category = j.at("reference_category").get<std::size_t>();
  return adj;
}

json report_to_obj(const FairnessReport& report) {
  return json{{"tau", report.tau},
              {"tau_percent", report.tau * 100.0},
              {"effective_quantiles", report.effective_quantiles},
              {"max_gap", report.max_gap},
              {"covariance_measure", report.covariance_measure},
              {"risk", report.risk},
              {"group_sizes", report.group_sizes}};
}

FairnessReport report_from_obj(const json& j) {
  FairnessReport report;
  report.tau = j.at("tau").get<double>();
  report.effective_quantiles = j.at("effective_quantiles").get<std::vector<double>>();
  report.max_gap = j.at("max_gap").get<double>();
  report.covariance_measure = j.at("covariance_measure").get<double>();
  report.risk = j.at("risk").get<double>();
  report.group_sizes = j.at("group_sizes").get<std::vector<std::size_t>>();
  return report;
}

json table_to_obj(const BeforeAfterTable& table) {
  return json{{"targets", table.targets},
              {"before", table.before},
              {"after", table.after},
              {"group_sizes", table.group_sizes}};
}

BeforeAfterTable table_from_obj(const json& j) {
  BeforeAfterTable table;
  table.targets = j.at("targets").get<std::vector<double>>();
  table.before = j.at("before").get<std::vector<std::vector<double>>>();
  table.after = j.at("after").get<std::vector<std::vector<double>>>();
  table.group_sizes = j.at("group_sizes").get<std::vector<std::size_t>>();
  return table;
}

json config_to_obj(const SyntheticConfig& config) {
  return json{{"p", config.p},
              {"n", config.n},
              {"off_diagonal", config.off_diagonal},
              {"mu_true", config.mu_true},
              {"tau", config.tau},
              {"base_seed", config.base_seed},
              {"parameter_seed", config.parameter_seed},
              {"same_sample_adjustment", config.same_sample_adjustment}};
}

SyntheticConfig config_from_obj(const json& j) {
  SyntheticConfig config;
  config.p = j.at("p").get<std::size_t>();
  config.n = j.at("n").get<std::size_t>();
  config.off_diagonal = j.at("off_diagonal").get<double>();
  config.mu_true = j.at("mu_true").get<double>();
  config.tau = j.at("tau").get<double>();
  config.base_seed = j.at("base_seed").get<std::uint64_t>();
  config.parameter_seed = j.at("parameter_seed").get<std::uint64_t>();
  config.same_sample_adjustment = j.at("same_sample_adjustment").get<bool>();
  return config;
}

json gap_to_obj(const GapSummary& s) {
  return json{{"mean", s.mean}, {"q05", s.q05},  {"q25", s.q25},
              {"median", s.median}, {"q75", s.q75}, {"q95", s.q95}};
}

GapSummary gap_from_obj(const json& j) {
  GapSummary s;
  s.mean = j.at("mean").get<double>();
  s.q05 = j.at("q05").get<double>();
  s.q25 = j.at("q25").get<double>();
  s.median = j.at("median").get<double>();
  s.q75 = j.at("q75").get<double>();
  s.q95 = j.at("q95").get<double>();
  return s;
}

}  // namespace

std::string to_json(const QuantileFit& fit) { return dump(fit_to_obj(fit)); }

QuantileFit quantile_fit_from_json(const std::string& text) {
  try {
    return fit_from_obj(parse_text(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("quantile fit json: ") + e.what());
  }
}

std::string to_json(const QuantileProcess& process) {
  json fits = json::array();
  for (const auto& f : process.fits) fits.push_back(fit_to_obj(f));
  return dump(json{{"taus", process.taus}, {"fits", std::move(fits)}});
}

QuantileProcess process_from_json(const std::string& text) {
  try {
    const json j = parse_text(text);
    QuantileProcess process;
    process.taus = j.at("taus").get<std::vector<double>>();
    for (const auto& f : j.at("fits")) process.fits.push_back(fit_from_obj(f));
    return process;
  } catch (const json::exception& e) {
    throw DataError(std::string("quantile process json: ") + e.what());
  }
}

std::string to_json(const Adjustment& adj) { return dump(adjustment_to_obj(adj)); }

Adjustment adjustment_from_json(const std::string& text) {
  try {
    return adjustment_from_obj(parse_text(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("adjustment json: ") + e.what());
  }
}

std::string to_json(const FairnessReport& report) { return dump(report_to_obj(report)); }

FairnessReport fairness_report_from_json(const std::string& text) {
  try {
    return report_from_obj(parse_text(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("fairness report json: ") + e.what());
  }
}

std::string to_json(const BeforeAfterTable& table) { return dump(table_to_obj(table)); }

BeforeAfterTable table_from_json(const std::string& text) {
  try {
    return table_from_obj(parse_text(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("before/after table json: ") + e.what());
  }
}

std::string to_json(const ExperimentSummary& summary) {
  return dump(json{{"config", config_to_obj(summary.config)},
                   {"trials", summary.trials},
                   {"full", gap_to_obj(summary.full)},
                   {"excluded", gap_to_obj(summary.excluded)},
                   {"corrected", gap_to_obj(summary.corrected)},
                   {"histogram_edges", summary.histogram_edges},
                   {"histogram_full", summary.histogram_full},
                   {"histogram_excluded", summary.histogram_excluded},
                   {"histogram_corrected", summary.histogram_corrected},
                   {"failed_trials", summary.failed_trials},
                   {"first_failure", summary.first_failure}});
}

ExperimentSummary experiment_from_json(const std::string& text) {
  try {
    const json j = parse_text(text);
    ExperimentSummary summary;
    summary.config = config_from_obj(j.at("config"));
    summary.trials = j.at("trials").get<std::size_t>();
    summary.full = gap_from_obj(j.at("full"));
    summary.excluded = gap_from_obj(j.at("excluded"));
    summary.corrected = gap_from_obj(j.at("corrected"));
    summary.histogram_edges = j.at("histogram_edges").get<std::vector<double>>();
    summary.histogram_full = j.at("histogram_full").get<std::vector<std::size_t>>();
    summary.histogram_excluded = j.at("histogram_excluded").get<std::vector<std::size_t>>();
    summary.histogram_corrected = j.at("histogram_corrected").get<std::vector<std::size_t>>();
    summary.failed_trials = j.at("failed_trials").get<std::vector<std::size_t>>();
    summary.first_failure = j.at("first_failure").get<std::string>();
    return summary;
  } catch (const json::exception& e) {
    throw DataError(std::string("experiment summary json: ") + e.what());
  }
}

std::string to_json(const RateReport& report) {
  json points = json::array();
  for (const auto& p : report.points) {
    points.push_back(json{{"n", p.n},
                          {"mean_gap_full", p.mean_gap_full},
                          {"mean_gap_excluded", p.mean_gap_excluded},
                          {"mean_gap_corrected", p.mean_gap_corrected},
                          {"mean_faithfulness_dev", p.mean_faithfulness_dev}});
  }
  return dump(json{{"config", config_to_obj(report.config)},
                   {"trials_per_n", report.trials_per_n},
                   {"points", std::move(points)},
                   {"slope_full", report.slope_full},
                   {"slope_excluded", report.slope_excluded},
                   {"slope_corrected", report.slope_corrected}});
}

RateReport rate_report_from_json(const std::string& text) {
  try {
    const json j = parse_text(text);
    RateReport report;
    report.config = config_from_obj(j.at("config"));
    report.trials_per_n = j.at("trials_per_n").get<std::size_t>();
    for (const auto& pj : j.at("points")) {
      RatePoint p;
      p.n = pj.at("n").get<std::size_t>();
      p.mean_gap_full = pj.at("mean_gap_full").get<double>();
      p.mean_gap_excluded = pj.at("mean_gap_excluded").get<double>();
      p.mean_gap_corrected = pj.at("mean_gap_corrected").get<double>();
      p.mean_faithfulness_dev = pj.at("mean_faithfulness_dev").get<double>();
      report.points.push_back(p);
    }
    report.slope_full = j.at("slope_full").get<double>();
    report.slope_excluded = j.at("slope_excluded").get<double>();
    report.slope_corrected = j.at("slope_corrected").get<double>();
    return report;
  } catch (const json::exception& e) {
    throw DataError(std::string("rate report json: ") + e.what());
  }
}

std::string to_json(const RunManifest& manifest) {
  return dump(json{{"command", manifest.command},
                   {"tool_version", manifest.tool_version},
                   {"settings", manifest.settings},
                   {"input_digests", manifest.input_digests},
                   {"outputs", manifest.outputs},
                   {"elapsed_seconds", manifest.elapsed_seconds}});
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    const json j = parse_text(text);
    RunManifest manifest;
    manifest.command = j.at("command").get<std::string>();
    manifest.tool_version = j.at("tool_version").get<std::string>();
    manifest.settings = j.at("settings").get<std::map<std::string, std::string>>();
    manifest.input_digests = j.at("input_digests").get<std::map<std::string, std::string>>();
    manifest.outputs = j.at("outputs").get<std::vector<std::string>>();
    manifest.elapsed_seconds = j.at("elapsed_seconds").get<double>();
    return manifest;
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest json: ") + e.what());
  }
}

std::string process_to_csv(const QuantileProcess& process,
                           const std::vector<std::string>& column_names) {
  if (process.fits.empty()) throw DataError("process csv: no fits");
  const std::size_t p = process.fits.front().beta.size();
  if (column_names.size() != p) {
    throw DataError("process csv: " + std::to_string(column_names.size()) + " names for " +
                    std::to_string(p) + " coefficients");
  }
  std::ostringstream out;
  out << "tau";
  for (const auto& name : column_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < process.fits.size(); ++i) {
    const QuantileFit& fit = process.fits[i];
    if (fit.beta.size() != p) throw DataError("process csv: ragged coefficient vectors");
    out << format_shortest(fit.tau);
    for (double b : fit.beta) out << ',' << format_shortest(b);
    out << '\n';
  }
  return out.str();
}

std::string table_to_csv(const BeforeAfterTable& table) {
  if (table.targets.empty() || table.before.empty()) {
    throw DataError("before/after csv: empty table");
  }
  std::ostringstream out;
  out << "series";
  for (double t : table.targets) out << ',' << format_shortest(t * 100.0);
  out << '\n';
  const auto emit = [&](const char* phase, const std::vector<std::vector<double>>& rows) {
    for (std::size_t g = 0; g < rows.size(); ++g) {
      out << phase << "_group" << g;
      for (double v : rows[g]) out << ',' << format_fixed2(v * 100.0);
      out << '\n';
    }
  };
  emit("before", table.before);
  emit("after", table.after);
  return out.str();
}

std::string experiment_to_csv(const ExperimentSummary& summary) {
  const std::size_t bins = summary.histogram_full.size();
  if (summary.histogram_edges.size() != bins + 1 || summary.histogram_excluded.size() != bins ||
      summary.histogram_corrected.size() != bins) {
    throw DataError("experiment csv: inconsistent histogram");
  }
  std::ostringstream out;
  out << "bin_lo,bin_hi,full,excluded,corrected\n";
  for (std::size_t b = 0; b < bins; ++b) {
    out << format_shortest(summary.histogram_edges[b]) << ','
        << format_shortest(summary.histogram_edges[b + 1]) << ',' << summary.histogram_full[b]
        << ',' << summary.histogram_excluded[b] << ',' << summary.histogram_corrected[b] << '\n';
  }
  return out.str();
}

std::string rate_to_csv(const RateReport& report) {
  std::ostringstream out;
  out << "n,mean_gap_full,mean_gap_excluded,mean_gap_corrected,mean_faithfulness_dev\n";
  for (const auto& p : report.points) {
    out << p.n << ',' << format_shortest(p.mean_gap_full) << ','
        << format_shortest(p.mean_gap_excluded) << ',' << format_shortest(p.mean_gap_corrected)
        << ',' << format_shortest(p.mean_faithfulness_dev) << '\n';
  }
  return out.str();
}

std::string fixture_to_csv(const FixtureTable& table) {
  if (table.columns.empty() || table.rows == 0) throw DataError("fixture csv: empty table");
  std::ostringstream out;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j > 0) out << ',';
    out << table.columns[j];
  }
  out << '\n';
  const std::size_t cols = table.columns.size();
  for (std::size_t i = 0; i < table.rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j > 0) out << ',';
      out << format_shortest(table.values[i * cols + j]);
    }
    out << '\n';
  }
  return out.str();
}

std::string format_shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buf, ptr);
}

std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;  // FNV offset basis
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;  // FNV prime
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string digest_file(const std::string& path) { return digest_hex(read_text_file(path)); }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError(path + ": write failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace fairqr
