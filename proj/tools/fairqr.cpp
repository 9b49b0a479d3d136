// fairqr: quantile regression with a group-level fairness correction.
//
// Subcommands:
//   fit      one quantile regression fit from a CSV file
//   process  coefficient paths over a grid of quantile levels
//   adjust   fit (and optionally evaluate) the per-group correction
//   eval     fairness report for precomputed predictions
//   synth    Monte Carlo experiment on synthetic data
//   rate     convergence-rate study over a grid of sample sizes
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 solver
// non-convergence. Every artifact written via --output is accompanied by a
// <output>.manifest.json recording the command, settings, input digests and
// timing; timing lives only in the manifest so artifacts stay byte-stable.

#include <chrono>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fairqr/csv.hpp"
#include "fairqr/design.hpp"
#include "fairqr/errors.hpp"
#include "fairqr/fairness.hpp"
#include "fairqr/oracle.hpp"
#include "fairqr/quantile.hpp"
#include "fairqr/reports.hpp"
#include "fairqr/rng.hpp"
#include "fairqr/synthetic.hpp"
#include "fairqr/version.hpp"

namespace {

// Effective run state shared by every subcommand: the global flags, the
// reconstructed command line, and the manifest bookkeeping.
struct RunContext {
  double tau = 0.5;
  std::uint64_t seed = 20260816ull;
  std::string config_path;
  std::string output_path;
  std::string format = "json";

  std::string command;
  std::map<std::string, std::string> settings;
  std::map<std::string, std::string> input_digests;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void note_input(const std::string& path) { input_digests[path] = fairqr::digest_file(path); }
  void set(const std::string& key, const std::string& value) { settings[key] = value; }
  void set(const std::string& key, double value) { settings[key] = fairqr::format_shortest(value); }
  void set(const std::string& key, std::uint64_t value) { settings[key] = std::to_string(value); }
  void set(const std::string& key, bool value) { settings[key] = value ? "true" : "false"; }

  void reject_config(const char* subcommand) const {
    if (!config_path.empty()) {
      throw fairqr::UsageError(std::string("--config only applies to synth and rate, not ") +
                               subcommand);
    }
  }

  // Prints the artifact to stdout, or writes it to --output together with a
  // sibling manifest file.
  int emit(const std::string& body) {
    if (output_path.empty()) {
      std::cout << body;
      return 0;
    }
    fairqr::write_text_file(output_path, body);
    fairqr::RunManifest manifest;
    manifest.command = command;
    manifest.tool_version = fairqr::kVersion;
    manifest.settings = settings;
    manifest.input_digests = input_digests;
    manifest.outputs = {output_path};
    manifest.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fairqr::write_text_file(output_path + ".manifest.json", fairqr::to_json(manifest));
    return 0;
  }
};

// One subsample of a loaded table, with the design sliced row-wise.
struct SampleView {
  fairqr::DesignMatrix x;
  std::vector<double> y;
  std::vector<int> a;
};

SampleView take_rows(const fairqr::TabularDataset& ds, const std::vector<std::size_t>& idx) {
  const std::size_t p = ds.x.cols();
  std::vector<double> values;
  values.reserve(idx.size() * p);
  std::vector<double> y;
  y.reserve(idx.size());
  std::vector<int> a;
  a.reserve(idx.size());
  for (std::size_t i : idx) {
    const double* row = ds.x.row(i);
    values.insert(values.end(), row, row + p);
    y.push_back(ds.y[i]);
    if (!ds.a.empty()) a.push_back(ds.a[i]);
  }
  return {fairqr::DesignMatrix(std::move(values), idx.size(), p, ds.x.column_names(),
                               ds.x.has_intercept()),
          std::move(y), std::move(a)};
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  fairqr::CounterRng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.next_unit() * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ostringstream out;
  out << "key,value\n";
  for (const auto& [key, value] : rows) out << key << ',' << value << '\n';
  return out.str();
}

std::string adjustment_to_csv(const fairqr::Adjustment& adj) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("tau", fairqr::format_shortest(adj.tau));
  rows.emplace_back("intercept", fairqr::format_shortest(adj.intercept));
  for (std::size_t k = 0; k < adj.offsets.size(); ++k) {
    rows.emplace_back("offset_group" + std::to_string(k),
                      fairqr::format_shortest(adj.offsets[k]));
  }
  rows.emplace_back("reference_category", std::to_string(adj.reference_category));
  return key_value_csv(rows);
}

std::string report_to_csv(const fairqr::FairnessReport& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("tau", fairqr::format_shortest(report.tau));
  for (std::size_t k = 0; k < report.effective_quantiles.size(); ++k) {
    rows.emplace_back("effective_quantile_group" + std::to_string(k),
                      fairqr::format_shortest(report.effective_quantiles[k]));
  }
  rows.emplace_back("max_gap", fairqr::format_shortest(report.max_gap));
  rows.emplace_back("covariance_measure", fairqr::format_shortest(report.covariance_measure));
  rows.emplace_back("risk", fairqr::format_shortest(report.risk));
  for (std::size_t k = 0; k < report.group_sizes.size(); ++k) {
    rows.emplace_back("group_size" + std::to_string(k), std::to_string(report.group_sizes[k]));
  }
  return key_value_csv(rows);
}

// Flags shared by the CSV-consuming subcommands.
struct TableArgs {
  std::string input;
  std::string response;
  std::string protected_column;
  bool no_intercept = false;
};

void add_table_options(CLI::App* sub, TableArgs& args, bool protected_required) {
  sub->add_option("--input", args.input, "input CSV file")->required();
  sub->add_option("--response", args.response, "name of the response column")->required();
  auto* prot = sub->add_option("--protected", args.protected_column,
                               "name of the protected-attribute column (small nonnegative "
                               "integer codes)");
  if (protected_required) prot->required();
  sub->add_flag("--no-intercept", args.no_intercept, "do not prepend an intercept column");
}

void record_table_settings(RunContext& ctx, const TableArgs& args) {
  ctx.set("input", args.input);
  ctx.set("response", args.response);
  if (!args.protected_column.empty()) ctx.set("protected", args.protected_column);
  ctx.set("no_intercept", args.no_intercept);
}

fairqr::SyntheticConfig resolve_config(RunContext& ctx, bool tau_given, bool seed_given) {
  fairqr::SyntheticConfig config;
  if (!ctx.config_path.empty()) {
    config = fairqr::load_config(ctx.config_path);
    ctx.note_input(ctx.config_path);
    ctx.set("config", ctx.config_path);
  }
  if (tau_given) config.tau = ctx.tau;
  if (seed_given) config.base_seed = ctx.seed;
  config.validate();
  ctx.set("p", config.p);
  ctx.set("n", config.n);
  ctx.set("off_diagonal", config.off_diagonal);
  ctx.set("mu_true", config.mu_true);
  ctx.set("tau", config.tau);
  ctx.set("base_seed", config.base_seed);
  ctx.set("parameter_seed", config.parameter_seed);
  ctx.set("same_sample_adjustment", config.same_sample_adjustment);
  return config;
}

int run_fit(RunContext& ctx, const TableArgs& table, int max_iterations) {
  ctx.reject_config("fit");
  const auto ds = fairqr::load_csv(table.input, table.response, table.protected_column,
                                   table.no_intercept);
  ctx.note_input(table.input);
  record_table_settings(ctx, table);
  ctx.set("tau", ctx.tau);
  ctx.set("max_iterations", static_cast<std::size_t>(max_iterations));
  fairqr::SolverOptions options;
  options.max_iterations = max_iterations;
  const auto fit = fairqr::fit(ds.x, ds.y, fairqr::QuantileLevel(ctx.tau), options);
  std::string body;
  if (ctx.format == "csv") {
    fairqr::QuantileProcess process{{ctx.tau}, {fit}};
    body = fairqr::process_to_csv(process, ds.x.column_names());
  } else {
    body = fairqr::to_json(fit);
  }
  return ctx.emit(body);
}

int run_process(RunContext& ctx, const TableArgs& table, std::vector<double> taus) {
  ctx.reject_config("process");
  const auto ds = fairqr::load_csv(table.input, table.response, table.protected_column,
                                   table.no_intercept);
  ctx.note_input(table.input);
  record_table_settings(ctx, table);
  if (taus.empty()) taus = fairqr::default_tau_grid();
  {
    std::ostringstream joined;
    for (std::size_t i = 0; i < taus.size(); ++i) {
      if (i > 0) joined << ' ';
      joined << fairqr::format_shortest(taus[i]);
    }
    ctx.set("taus", joined.str());
  }
  const auto process = fairqr::quantile_process(ds.x, ds.y, taus, fairqr::SolverOptions{});
  const std::string body = ctx.format == "csv"
                               ? fairqr::process_to_csv(process, ds.x.column_names())
                               : fairqr::to_json(process);
  return ctx.emit(body);
}

struct AdjustArgs {
  TableArgs table;
  std::string adjust_input;
  std::string test_input;
  bool same_sample = false;
  std::vector<double> target_percents;
};

int run_adjust(RunContext& ctx, const AdjustArgs& args) {
  ctx.reject_config("adjust");
  const auto ds = fairqr::load_csv(args.table.input, args.table.response,
                                   args.table.protected_column, args.table.no_intercept);
  ctx.note_input(args.table.input);
  record_table_settings(ctx, args.table);
  ctx.set("tau", ctx.tau);
  ctx.set("same_sample", args.same_sample);

  SampleView train{ds.x, ds.y, ds.a};
  SampleView adjust = train;
  SampleView test{fairqr::DesignMatrix({1.0}, 1, 1), {}, {}};
  bool have_test = false;

  if (!args.adjust_input.empty()) {
    // External splits: the extra files must share the training file's schema.
    const auto adjust_ds = fairqr::load_csv(args.adjust_input, args.table.response,
                                            args.table.protected_column, args.table.no_intercept);
    ctx.note_input(args.adjust_input);
    ctx.set("adjust_input", args.adjust_input);
    adjust = SampleView{adjust_ds.x, adjust_ds.y, adjust_ds.a};
    if (!args.test_input.empty()) {
      const auto test_ds = fairqr::load_csv(args.test_input, args.table.response,
                                            args.table.protected_column, args.table.no_intercept);
      ctx.note_input(args.test_input);
      ctx.set("test_input", args.test_input);
      test = SampleView{test_ds.x, test_ds.y, test_ds.a};
      have_test = true;
    }
  } else {
    // Internal deterministic split: shuffle once with the seed, then carve
    // train/adjust/test as 50/25/25 percent (or train and adjust on the same
    // half with --same-sample, leaving the other half as test).
    if (!args.test_input.empty()) {
      throw fairqr::UsageError("--test-input requires --adjust-input");
    }
    ctx.set("seed", ctx.seed);
    const auto idx = shuffled_indices(ds.y.size(), ctx.seed);
    const std::size_t n = idx.size();
    const std::size_t n_train = n / 2;
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
    train = take_rows(ds, train_idx);
    if (args.same_sample) {
      adjust = train;
      test = take_rows(ds, {idx.begin() + n_train, idx.end()});
    } else {
      const std::size_t n_adjust = n / 4;
      adjust = take_rows(ds, {idx.begin() + n_train, idx.begin() + n_train + n_adjust});
      test = take_rows(ds, {idx.begin() + n_train + n_adjust, idx.end()});
    }
    have_test = test.y.size() > 0;
  }

  const fairqr::ProtectedAttribute a_adjust(adjust.a, ds.protected_categories);

  if (!args.target_percents.empty()) {
    if (!have_test) {
      throw fairqr::UsageError("--targets needs a test sample: pass --test-input");
    }
    std::vector<double> targets;
    targets.reserve(args.target_percents.size());
    for (double pct : args.target_percents) targets.push_back(pct / 100.0);
    {
      std::ostringstream joined;
      for (std::size_t i = 0; i < args.target_percents.size(); ++i) {
        if (i > 0) joined << ' ';
        joined << fairqr::format_shortest(args.target_percents[i]);
      }
      ctx.set("targets", joined.str());
    }
    const fairqr::ProtectedAttribute a_test(test.a, ds.protected_categories);
    const auto table = fairqr::before_after_table(train.x, train.y, adjust.x, adjust.y, a_adjust,
                                                  test.x, test.y, a_test, targets,
                                                  fairqr::SolverOptions{});
    const std::string body =
        ctx.format == "csv" ? fairqr::table_to_csv(table) : fairqr::to_json(table);
    return ctx.emit(body);
  }

  const auto base = fairqr::fit(train.x, train.y, fairqr::QuantileLevel(ctx.tau));
  const auto predictions = fairqr::predict(base, adjust.x);
  const auto adjustment = fairqr::fit_adjustment(predictions, adjust.y, a_adjust, ctx.tau);
  const std::string body =
      ctx.format == "csv" ? adjustment_to_csv(adjustment) : fairqr::to_json(adjustment);
  return ctx.emit(body);
}

int run_eval(RunContext& ctx, const TableArgs& table, const std::string& predictions_path) {
  ctx.reject_config("eval");
  const auto ds = fairqr::load_csv(table.input, table.response, table.protected_column,
                                   table.no_intercept);
  ctx.note_input(table.input);
  const auto predictions = fairqr::load_column(predictions_path, "prediction");
  ctx.note_input(predictions_path);
  record_table_settings(ctx, table);
  ctx.set("predictions", predictions_path);
  ctx.set("tau", ctx.tau);
  if (predictions.size() != ds.y.size()) {
    throw fairqr::DataError("predictions file has " + std::to_string(predictions.size()) +
                            " rows but " + table.input + " has " + std::to_string(ds.y.size()));
  }
  const fairqr::ProtectedAttribute attr(ds.a, ds.protected_categories);
  const auto report = fairqr::fairness_report(predictions, ds.y, attr, ctx.tau);
  const std::string body =
      ctx.format == "csv" ? report_to_csv(report) : fairqr::to_json(report);
  return ctx.emit(body);
}

int run_synth(RunContext& ctx, std::size_t trials, bool tau_given, bool seed_given) {
  const auto config = resolve_config(ctx, tau_given, seed_given);
  ctx.set("trials", trials);
  const auto summary = fairqr::run_experiment(config, trials, config.tau);
  const std::string body =
      ctx.format == "csv" ? fairqr::experiment_to_csv(summary) : fairqr::to_json(summary);
  return ctx.emit(body);
}

int run_rate(RunContext& ctx, const std::vector<std::size_t>& n_grid, std::size_t trials_per_n,
             bool tau_given, bool seed_given) {
  const auto config = resolve_config(ctx, tau_given, seed_given);
  ctx.set("trials_per_n", trials_per_n);
  {
    std::ostringstream joined;
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (i > 0) joined << ' ';
      joined << n_grid[i];
    }
    ctx.set("n_grid", joined.str());
  }
  const auto report = fairqr::rate_study(config, n_grid, trials_per_n, config.tau);
  const std::string body =
      ctx.format == "csv" ? fairqr::rate_to_csv(report) : fairqr::to_json(report);
  return ctx.emit(body);
}

int run_oracle(RunContext& ctx, const TableArgs& table) {
  ctx.reject_config("oracle");
  const auto ds = fairqr::load_csv(table.input, table.response, table.protected_column,
                                   table.no_intercept);
  ctx.note_input(table.input);
  record_table_settings(ctx, table);
  ctx.set("tau", ctx.tau);
  const auto fit = fairqr::brute_force_fit(ds.x, ds.y, ctx.tau);
  std::ostringstream out;
  out << "{\n  \"basis\": [";
  for (std::size_t i = 0; i < fit.basis.size(); ++i) {
    if (i > 0) out << ", ";
    out << fit.basis[i];
  }
  out << "],\n  \"beta\": [";
  for (std::size_t i = 0; i < fit.beta.size(); ++i) {
    if (i > 0) out << ", ";
    out << fairqr::format_shortest(fit.beta[i]);
  }
  out << "],\n  \"loss\": " << fairqr::format_shortest(fit.loss) << "\n}\n";
  return ctx.emit(out.str());
}

int run_fixture(RunContext& ctx, std::size_t rows, double effect, bool seed_given) {
  ctx.reject_config("fixture");
  const std::uint64_t seed = seed_given ? ctx.seed : 7ull;
  ctx.set("rows", rows);
  ctx.set("effect", effect);
  ctx.set("seed", seed);
  const auto table = fairqr::birthweight_fixture(rows, seed, effect);
  return ctx.emit(fairqr::fixture_to_csv(table));
}

}  // namespace

int main(int argc, char** argv) {
  RunContext ctx;
  {
    std::ostringstream cmd;
    for (int i = 0; i < argc; ++i) {
      if (i > 0) cmd << ' ';
      cmd << argv[i];
    }
    ctx.command = cmd.str();
  }

  CLI::App app{"quantile regression with a group-level fairness correction"};
  app.require_subcommand(1);
  auto* tau_opt = app.add_option("--tau", ctx.tau, "quantile level in (0, 1)")
                      ->capture_default_str();
  auto* seed_opt = app.add_option("--seed", ctx.seed, "seed for splits and synthetic data")
                       ->capture_default_str();
  app.add_option("--config", ctx.config_path, "synthetic config file (synth and rate)");
  app.add_option("--output", ctx.output_path,
                 "artifact path; also writes <output>.manifest.json (stdout when omitted)");
  app.add_option("--format", ctx.format, "artifact format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  std::function<int()> action;

  {
    auto* sub = app.add_subcommand("fit", "fit one quantile regression from a CSV file");
    sub->fallthrough();
    auto table = std::make_shared<TableArgs>();
    auto max_iterations = std::make_shared<int>(100);
    add_table_options(sub, *table, false);
    sub->add_option("--max-iterations", *max_iterations, "interior-point iteration cap")
        ->capture_default_str();
    sub->callback([&, table, max_iterations] {
      action = [&, table, max_iterations] { return run_fit(ctx, *table, *max_iterations); };
    });
  }
  {
    auto* sub = app.add_subcommand("process", "coefficient paths over a grid of quantile levels");
    sub->fallthrough();
    auto table = std::make_shared<TableArgs>();
    auto taus = std::make_shared<std::vector<double>>();
    add_table_options(sub, *table, false);
    sub->add_option("--taus", *taus, "explicit quantile levels (default: 0.05 to 0.95)");
    sub->callback([&, table, taus] {
      action = [&, table, taus] { return run_process(ctx, *table, *taus); };
    });
  }
  {
    auto* sub = app.add_subcommand("adjust", "fit the per-group correction on a split");
    sub->fallthrough();
    auto args = std::make_shared<AdjustArgs>();
    add_table_options(sub, args->table, true);
    sub->add_option("--adjust-input", args->adjust_input,
                    "separate CSV for the adjustment sample (same schema)");
    sub->add_option("--test-input", args->test_input,
                    "separate CSV for the evaluation sample (same schema)");
    sub->add_flag("--same-sample", args->same_sample,
                  "reuse the training half as the adjustment sample");
    sub->add_option("--targets", args->target_percents,
                    "quantile targets in percent; emits a before/after table");
    sub->callback([&, args] {
      action = [&, args] { return run_adjust(ctx, *args); };
    });
  }
  {
    auto* sub = app.add_subcommand("eval", "fairness report for precomputed predictions");
    sub->fallthrough();
    auto table = std::make_shared<TableArgs>();
    auto predictions = std::make_shared<std::string>();
    add_table_options(sub, *table, true);
    sub->add_option("--predictions", *predictions,
                    "file with one prediction per row (column \"prediction\" or single column)")
        ->required();
    sub->callback([&, table, predictions] {
      action = [&, table, predictions] { return run_eval(ctx, *table, *predictions); };
    });
  }
  {
    auto* sub = app.add_subcommand("synth", "Monte Carlo experiment on synthetic data");
    sub->fallthrough();
    auto trials = std::make_shared<std::size_t>(200);
    sub->add_option("--trials", *trials, "number of trials")->capture_default_str();
    sub->callback([&, trials] {
      action = [&, trials] {
        return run_synth(ctx, *trials, tau_opt->count() > 0, seed_opt->count() > 0);
      };
    });
  }
  {
    auto* sub = app.add_subcommand("rate", "convergence-rate study over sample sizes");
    sub->fallthrough();
    auto n_grid = std::make_shared<std::vector<std::size_t>>(
        std::vector<std::size_t>{250, 500, 1000, 2000, 4000});
    auto trials_per_n = std::make_shared<std::size_t>(100);
    sub->add_option("--n-grid", *n_grid, "strictly increasing sample sizes (at least 3)");
    sub->add_option("--trials-per-n", *trials_per_n, "trials per sample size")
        ->capture_default_str();
    sub->callback([&, n_grid, trials_per_n] {
      action = [&, n_grid, trials_per_n] {
        return run_rate(ctx, *n_grid, *trials_per_n, tau_opt->count() > 0, seed_opt->count() > 0);
      };
    });
  }
  {
    auto* sub = app.add_subcommand("oracle", "exhaustive-search reference fit (tiny inputs)");
    sub->fallthrough();
    sub->group("");  // maintenance tool, hidden from --help
    auto table = std::make_shared<TableArgs>();
    add_table_options(sub, *table, false);
    sub->callback([&, table] {
      action = [&, table] { return run_oracle(ctx, *table); };
    });
  }
  {
    auto* sub = app.add_subcommand("fixture", "write the synthetic birthweight-schema CSV");
    sub->fallthrough();
    sub->group("");  // maintenance tool, hidden from --help
    auto rows = std::make_shared<std::size_t>(30000);
    auto effect = std::make_shared<double>(250.0);
    sub->add_option("--rows", *rows, "number of rows")->capture_default_str();
    sub->add_option("--effect", *effect, "planted group effect in grams")->capture_default_str();
    sub->callback([&, rows, effect] {
      action = [&, rows, effect] {
        return run_fixture(ctx, *rows, *effect, seed_opt->count() > 0);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return action ? action() : 1;
  } catch (const fairqr::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const fairqr::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fairqr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
