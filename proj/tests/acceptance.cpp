// Acceptance gate. Each check below exercises one shipped guarantee at its
// stated tolerance and runtime budget and prints exactly one [PASS]/[FAIL]
// line. The process exits nonzero if any check fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fairqr/design.hpp"
#include "fairqr/errors.hpp"
#include "fairqr/fairness.hpp"
#include "fairqr/oracle.hpp"
#include "fairqr/quantile.hpp"
#include "fairqr/reports.hpp"
#include "fairqr/rng.hpp"
#include "fairqr/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fairqr;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s (%s)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format_seconds(double s) {
  std::ostringstream out;
  out.precision(1);
  out << std::fixed << s << "s";
  return out.str();
}

// Random full-rank design: leading intercept column, remaining entries
// standard normal draws.
DesignMatrix random_design(CounterRng& rng, std::size_t n, std::size_t p) {
  std::vector<double> values(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    values[i * p] = 1.0;
    for (std::size_t j = 1; j < p; ++j) values[i * p + j] = rng.next_normal();
  }
  return DesignMatrix(std::move(values), n, p, {}, true);
}

// Solver loss equals the exhaustive vertex-enumeration loss on every small
// random instance.
void check_oracle_equivalence() {
  Stopwatch timer;
  CounterRng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double tau = 0.1 * (1 + i % 9);
    const std::size_t p = 1 + static_cast<std::size_t>(i % 2);
    const std::size_t n = p + 1 + static_cast<std::size_t>(rng.next_u64() % (10 - p));
    const auto x = random_design(rng, n, p);
    std::vector<double> y(n);
    for (auto& v : y) v = 2.0 * rng.next_normal() + 0.5;
    const auto solved = fit(x, y, QuantileLevel(tau));
    const auto exhaustive = brute_force_fit(x, y, tau);
    worst = std::max(worst, std::abs(solved.primal_objective - exhaustive.loss) /
                                (1.0 + std::abs(exhaustive.loss)));
  }
  const double elapsed = timer.seconds();
  std::ostringstream detail;
  detail << "100 instances, worst relative loss error " << worst << ", "
         << format_seconds(elapsed);
  report("oracle equivalence on small instances", worst <= 1e-9 && elapsed < 10.0, detail.str());
}

// Rank scores satisfy the dual equality constraints and equal the
// residual-sign indicator off the interpolation basis.
void check_dual_feasibility() {
  Stopwatch timer;
  CounterRng rng(202);
  double worst_gap_ratio = 0.0;
  int indicator_violations = 0;
  for (int i = 0; i < 100; ++i) {
    const double tau = 0.1 * (1 + i % 9);
    const std::size_t n = 200;
    const std::size_t p = 5;
    const auto x = random_design(rng, n, p);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
      double mean = 1.0;
      for (std::size_t j = 1; j < p; ++j) mean += 0.5 * x(r, j);
      y[r] = mean + rng.next_normal();
    }
    const auto solved = fit(x, y, QuantileLevel(tau));
    const auto preds = predict(solved, x);

    double gap = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double lhs = 0.0;
      double col_sum = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        lhs += x(r, j) * solved.rank_scores[r];
        col_sum += x(r, j);
      }
      gap = std::max(gap, std::abs(lhs - (1.0 - tau) * col_sum));
    }
    worst_gap_ratio = std::max(worst_gap_ratio, gap / (1e-6 * n * x.max_abs()));

    std::vector<bool> on_basis(n, false);
    for (const auto idx : solved.basis) on_basis[idx] = true;
    for (std::size_t r = 0; r < n; ++r) {
      if (on_basis[r]) continue;
      const double indicator = y[r] - preds[r] > 0.0 ? 1.0 : 0.0;
      if (solved.rank_scores[r] != indicator) ++indicator_violations;
    }
  }
  const double elapsed = timer.seconds();
  std::ostringstream detail;
  detail << "100 instances n=200 p=5, worst gap at " << worst_gap_ratio
         << " of tolerance, " << indicator_violations << " off-basis mismatches, "
         << format_seconds(elapsed);
  report("dual feasibility and off-basis rank scores",
         worst_gap_ratio <= 1.0 && indicator_violations == 0 && elapsed < 30.0, detail.str());
}

// With a binary group column in the design, each group's training exceedance
// rate stays within p/n_a of the target rate.
void check_training_balance() {
  Stopwatch timer;
  const std::size_t n = 1000;
  const std::size_t p = 21;
  const double tau = 0.2;
  double worst_slack = 0.0;
  bool ok = true;
  for (int seed = 0; seed < 50; ++seed) {
    CounterRng rng(3000 + static_cast<std::uint64_t>(seed));
    std::vector<double> values(n * p);
    std::vector<int> group(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      values[i * p] = 1.0;
      group[i] = rng.next_bernoulli(0.5) ? 1 : 0;
      values[i * p + 1] = static_cast<double>(group[i]);
      double mean = 2.0 * group[i];
      for (std::size_t j = 2; j < p; ++j) {
        values[i * p + j] = rng.next_normal();
        mean += values[i * p + j] / std::sqrt(19.0);
      }
      y[i] = mean + rng.next_normal();
    }
    const auto x = DesignMatrix(std::move(values), n, p, {}, true);
    const auto solved = fit(x, y, QuantileLevel(tau));
    const auto preds = predict(solved, x);
    std::size_t count[2] = {0, 0};
    std::size_t exceed[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      ++count[group[i]];
      if (y[i] > preds[i]) ++exceed[group[i]];
    }
    for (int g = 0; g < 2; ++g) {
      const double rate = static_cast<double>(exceed[g]) / static_cast<double>(count[g]);
      const double bound = static_cast<double>(p) / static_cast<double>(count[g]);
      const double slack = std::abs(rate - (1.0 - tau)) / bound;
      worst_slack = std::max(worst_slack, slack);
      if (slack > 1.0) ok = false;
    }
  }
  std::ostringstream detail;
  detail << "50 seeds n=1000 p=21 tau=0.2, worst deviation at " << worst_slack
         << " of the p/n_a bound, " << format_seconds(timer.seconds());
  report("per-group training balance", ok, detail.str());
}

// Desk-scale replication of the gap experiment: the corrected estimator
// roughly matches the full regression and clearly beats the excluded one.
void check_experiment_gaps() {
  Stopwatch timer;
  const auto summary = run_experiment(SyntheticConfig{}, 200, 0.5);
  const double elapsed = timer.seconds();
  const double med_full = summary.full.median;
  const double med_excluded = summary.excluded.median;
  const double med_corrected = summary.corrected.median;
  const bool ok = summary.failed_trials.empty() && med_corrected < 0.5 * med_excluded &&
                  med_corrected <= 2.0 * med_full && med_corrected >= 0.5 * med_full &&
                  elapsed < 300.0;
  std::ostringstream detail;
  detail << "200 trials, median gaps full " << med_full << ", excluded " << med_excluded
         << ", corrected " << med_corrected << ", " << summary.failed_trials.size()
         << " failed trials, " << format_seconds(elapsed);
  report("synthetic experiment gap ordering", ok, detail.str());
}

// Log-log decay of the mean gap: the corrected estimator shrinks at roughly
// the square-root rate while the excluded estimator stays flat.
void check_rate_slopes() {
  Stopwatch timer;
  const auto study = rate_study(SyntheticConfig{}, {250, 500, 1000, 2000, 4000}, 100, 0.5);
  const double elapsed = timer.seconds();
  const bool ok = study.slope_corrected >= -0.7 && study.slope_corrected <= -0.3 &&
                  study.slope_excluded > -0.2 && elapsed < 900.0;
  std::ostringstream detail;
  detail << "slopes corrected " << study.slope_corrected << ", excluded "
         << study.slope_excluded << ", full " << study.slope_full << ", "
         << format_seconds(elapsed);
  report("mean gap decay rate", ok, detail.str());
}

// Risk dominance and faithfulness over the same batch of detailed trials.
void run_detail_trials() {
  Stopwatch timer;
  const SyntheticConfig config{};
  const double tau = 0.5;
  const double risk_margin = 5.0 / std::sqrt(500.0);
  const double faith_bound = 3.0 / std::sqrt(500.0);
  int risk_ok_count = 0;
  double dev_sum = 0.0;
  double worst_excess = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto detail = run_trial_detail(config, i, tau);
    const double excess = detail.result.corrected.risk - detail.grid_best_risk;
    worst_excess = std::max(worst_excess, excess);
    if (excess <= risk_margin) ++risk_ok_count;
    dev_sum += std::abs(detail.result.corrected.exceedance - (1.0 - tau));
  }
  const double mean_dev = dev_sum / 100.0;
  const double elapsed = timer.seconds();

  std::ostringstream risk_detail;
  risk_detail << risk_ok_count << "/100 trials within margin " << risk_margin
              << ", worst excess " << worst_excess << ", " << format_seconds(elapsed);
  report("heldout risk within bound of grid oracle", risk_ok_count >= 95, risk_detail.str());

  std::ostringstream faith_detail;
  faith_detail << "mean |exceedance - 0.5| = " << mean_dev << " vs bound " << faith_bound;
  report("corrected predictor faithfulness", mean_dev <= faith_bound, faith_detail.str());
}

struct FixtureSample {
  DesignMatrix x;
  std::vector<double> y;
  std::vector<int> a;
};

// Split a fixture table into response (weight), protected attribute (black),
// and an intercept-led design over the remaining columns.
FixtureSample split_fixture(const FixtureTable& table) {
  const std::size_t cols = table.columns.size();
  std::size_t weight_col = cols;
  std::size_t black_col = cols;
  for (std::size_t j = 0; j < cols; ++j) {
    if (table.columns[j] == "weight") weight_col = j;
    if (table.columns[j] == "black") black_col = j;
  }
  const std::size_t p = cols - 1;  // drop weight and black, add intercept
  std::vector<double> values(table.rows * p);
  std::vector<std::string> names;
  names.reserve(p);
  names.push_back("intercept");
  for (std::size_t j = 0; j < cols; ++j) {
    if (j != weight_col && j != black_col) names.push_back(table.columns[j]);
  }
  std::vector<double> y(table.rows);
  std::vector<int> a(table.rows);
  for (std::size_t i = 0; i < table.rows; ++i) {
    const double* row = table.values.data() + i * cols;
    y[i] = row[weight_col];
    a[i] = static_cast<int>(row[black_col]);
    double* out = values.data() + i * p;
    *out++ = 1.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (j != weight_col && j != black_col) *out++ = row[j];
    }
  }
  return FixtureSample{DesignMatrix(std::move(values), table.rows, p, std::move(names), true),
                       std::move(y), std::move(a)};
}

// On the synthetic birthweight-schema fixture the correction pulls every
// per-group effective quantile within two percentage points of its target.
void check_fixture_table() {
  Stopwatch timer;
  const auto train = split_fixture(birthweight_fixture(10000, 11, 250.0));
  const auto adjust = split_fixture(birthweight_fixture(15000, 12, 250.0));
  const auto test = split_fixture(birthweight_fixture(5000, 13, 250.0));
  const std::vector<double> targets{0.05, 0.25, 0.50, 0.75};
  const auto table = before_after_table(train.x, train.y, adjust.x, adjust.y,
                                        ProtectedAttribute::binary(adjust.a), test.x, test.y,
                                        ProtectedAttribute::binary(test.a), targets);
  double worst_pp = 0.0;
  for (std::size_t g = 0; g < table.after.size(); ++g) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      worst_pp = std::max(worst_pp, 100.0 * std::abs(table.after[g][t] - targets[t]));
    }
  }
  std::ostringstream detail;
  detail << "train/adjust/test 10000/15000/5000, worst corrected deviation " << worst_pp
         << "pp across {5,25,50,75}, " << format_seconds(timer.seconds());
  report("fixture before/after table accuracy", worst_pp <= 2.0, detail.str());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FAIRQR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

// Re-running a command with identical inputs and seeds reproduces every
// artifact byte for byte.
void check_cli_determinism() {
  Stopwatch timer;
  const fs::path dir =
      fs::temp_directory_path() /
      ("fairqr_acceptance_" + std::to_string(static_cast<unsigned>(::getpid())));
  fs::create_directories(dir);
  bool ok = true;
  std::string note;
  {
    std::ofstream data(dir / "data.csv", std::ios::binary);
    data << "y,a,x1\n";
    CounterRng rng(9);
    for (int i = 0; i < 120; ++i) {
      const int a = i % 2;
      data << 0.25 * i + 3.0 * a + rng.next_unit() << "," << a << "," << (i % 13) << "\n";
    }
  }
  {
    std::ofstream cfg(dir / "exp.cfg", std::ios::binary);
    cfg << "p = 3\nn = 200\n";
  }
  const auto pair_identical = [&](const std::string& args, const std::string& slot) {
    const std::string first = (dir / (slot + "_1.out")).string();
    const std::string second = (dir / (slot + "_2.out")).string();
    if (run_cli(args + " --output " + first) != 0) return false;
    if (run_cli(args + " --output " + second) != 0) return false;
    return read_text_file(first) == read_text_file(second) &&
           digest_file(first) == digest_file(second);
  };
  const std::string data_path = (dir / "data.csv").string();
  if (!pair_identical("fit --input " + data_path + " --response y --protected a --tau 0.3",
                      "fit")) {
    ok = false;
    note += " fit differs;";
  }
  if (!pair_identical("synth --config " + (dir / "exp.cfg").string() + " --trials 5 --seed 21",
                      "synth")) {
    ok = false;
    note += " synth differs;";
  }
  if (!pair_identical("process --input " + data_path + " --response y --protected a"
                      " --taus 0.25 0.5 0.75 --format csv",
                      "process")) {
    ok = false;
    note += " process differs;";
  }
  fs::remove_all(dir);
  std::ostringstream detail;
  detail << "fit, synth, process artifacts byte-identical across reruns" << note << ", "
         << format_seconds(timer.seconds());
  report("command re-run determinism", ok, detail.str());
}

}  // namespace

int main() {
  Stopwatch total;
  try {
    check_oracle_equivalence();
    check_dual_feasibility();
    check_training_balance();
    check_experiment_gaps();
    check_rate_slopes();
    run_detail_trials();
    check_fixture_table();
    check_cli_determinism();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance run aborted (%s)\n", e.what());
    ++failures;
  }
  std::printf("%d of 9 checks failed, total %s\n", failures,
              format_seconds(total.seconds()).c_str());
  return failures == 0 ? 0 : 1;
}
