#pragma once

// Artifact serialization: JSON round trips for every report type, the CSV
// layouts (quantile process rows, before/after percentage table), content
// digests, and the run manifest that accompanies every written artifact.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairqr/fairness.hpp"
#include "fairqr/quantile.hpp"
#include "fairqr/synthetic.hpp"

namespace fairqr {

struct RunManifest {
  std::string command;      // reconstructed invocation
  std::string tool_version;
  std::map<std::string, std::string> settings;       // effective flags and config
  std::map<std::string, std::string> input_digests;  // path -> 64-bit FNV-1a hex
  std::vector<std::string> outputs;
  double elapsed_seconds = 0.0;  // informational only, never part of artifacts

  bool operator==(const RunManifest&) const = default;
};

// JSON text with two-space indent and a trailing newline. The parsers throw
// DataError on malformed input or missing fields, and every writer/parser
// pair round-trips exactly.
std::string to_json(const QuantileFit& fit);
std::string to_json(const QuantileProcess& process);
std::string to_json(const Adjustment& adj);
std::string to_json(const FairnessReport& report);
std::string to_json(const BeforeAfterTable& table);
std::string to_json(const ExperimentSummary& summary);
std::string to_json(const RateReport& report);
std::string to_json(const RunManifest& manifest);

QuantileFit quantile_fit_from_json(const std::string& text);
QuantileProcess process_from_json(const std::string& text);
Adjustment adjustment_from_json(const std::string& text);
FairnessReport fairness_report_from_json(const std::string& text);
BeforeAfterTable table_from_json(const std::string& text);
ExperimentSummary experiment_from_json(const std::string& text);
RateReport rate_report_from_json(const std::string& text);
RunManifest manifest_from_json(const std::string& text);

// One row per level under the header "tau,<name>,<name>,...". Numbers are
// shortest round-trip decimal.
std::string process_to_csv(const QuantileProcess& process,
                           const std::vector<std::string>& column_names);

// Percentage table, one series row per group and phase:
//   series,5,25,50,75
//   before_group0,4.42,7.91,...
//   ...
//   after_group1,...
// Values carry two decimals; the header prints each target times 100.
std::string table_to_csv(const BeforeAfterTable& table);

// Histogram rows: "bin_lo,bin_hi,full,excluded,corrected".
std::string experiment_to_csv(const ExperimentSummary& summary);

// Per-size rows:
// "n,mean_gap_full,mean_gap_excluded,mean_gap_corrected,mean_faithfulness_dev".
// The fitted slopes live in the JSON form.
std::string rate_to_csv(const RateReport& report);

// The raw synthetic table with its header row.
std::string fixture_to_csv(const FixtureTable& table);

// Shortest decimal text that parses back to exactly the same double.
std::string format_shortest(double v);

// 64-bit FNV-1a content digest as 16 lowercase hex digits.
std::string digest_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace fairqr
