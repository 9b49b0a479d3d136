// End-to-end command-line checks: exit codes, artifact layouts, manifests,
// and byte-for-byte determinism, all through the real binary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fairqr/errors.hpp"
#include "fairqr/reports.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() /
          ("fairqr_cli_test_" + std::to_string(static_cast<unsigned>(::getpid())));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

Scratch& scratch() {
  static Scratch s;
  return s;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FAIRQR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string tiny_csv() {
  static const std::string path =
      scratch().file("tiny.csv", "y,a,x1\n1,0,2\n2,0,3\n3,1,4\n4,1,5\n");
  return path;
}

// A response spread out enough that one interior-point step cannot converge.
std::string slow_csv() {
  static std::string path;
  if (path.empty()) {
    std::string content = "y,x1,x2\n";
    for (int i = 0; i < 50; ++i) {
      content += std::to_string(i * i) + "," + std::to_string(i % 7) + "," +
                 std::to_string((i * 13) % 11) + "\n";
    }
    path = scratch().file("slow.csv", content);
  }
  return path;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("fit --help") == 0);
  CHECK(run_cli("") == 1);                          // missing subcommand
  CHECK(run_cli("fit") == 1);                       // missing required flags
  CHECK(run_cli("fit --no-such-flag") == 1);        // unknown option
  CHECK(run_cli("frobnicate") == 1);                // unknown subcommand
  CHECK(run_cli("fit --input x.csv --response y --format yaml") == 1);
}

TEST_CASE("fit writes a parsable artifact and a manifest") {
  const auto out = scratch().path("fit.json");
  CHECK(run_cli("fit --input " + tiny_csv() + " --response y --protected a --tau 0.5 --output " +
                out) == 0);
  const auto fit = fairqr::quantile_fit_from_json(fairqr::read_text_file(out));
  CHECK(fit.tau == 0.5);
  REQUIRE(fit.beta.size() == 2);  // intercept + x1, protected column excluded
  CHECK(fit.beta[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(fit.beta[1] == doctest::Approx(1.0).epsilon(1e-9));

  const auto manifest = fairqr::manifest_from_json(fairqr::read_text_file(out + ".manifest.json"));
  CHECK(manifest.command.find("fit") != std::string::npos);
  CHECK(manifest.outputs == std::vector<std::string>{out});
  CHECK(manifest.input_digests.count(tiny_csv()) == 1);
  CHECK(manifest.settings.at("tau") == "0.5");
  CHECK(manifest.tool_version.size() > 0);
}

TEST_CASE("fit emits single-row process csv on request") {
  const auto out = scratch().path("fit.csv");
  CHECK(run_cli("fit --input " + tiny_csv() + " --response y --protected a --format csv"
                " --output " + out) == 0);
  const auto text = fairqr::read_text_file(out);
  CHECK(text.rfind("tau,intercept,x1\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("exit codes distinguish data errors from non-convergence") {
  CHECK(run_cli("fit --input " + tiny_csv() + " --response nope") == 2);
  CHECK(run_cli("fit --input /nonexistent.csv --response y") == 2);
  CHECK(run_cli("fit --input " + slow_csv() + " --response y --max-iterations 1") == 3);
  CHECK(run_cli("fit --input " + tiny_csv() + " --response y --tau 1.5") == 2);
  // --config belongs to synth and rate only.
  const auto cfg = scratch().file("stray.cfg", "n = 200\n");
  CHECK(run_cli("fit --input " + tiny_csv() + " --response y --config " + cfg) == 1);
}

TEST_CASE("process covers a grid of levels") {
  const auto out = scratch().path("process.json");
  CHECK(run_cli("process --input " + tiny_csv() + " --response y --protected a"
                " --taus 0.25 0.5 0.75 --output " + out) == 0);
  const auto process = fairqr::process_from_json(fairqr::read_text_file(out));
  REQUIRE(process.taus == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(process.fits.size() == 3);
}

TEST_CASE("adjust on an internal split emits an adjustment") {
  std::string content = "y,a,x1\n";
  for (int i = 0; i < 200; ++i) {
    const int a = i % 2;
    content += std::to_string(0.5 * i + 10.0 * a) + "," + std::to_string(a) + "," +
               std::to_string(i % 17) + "\n";
  }
  const auto data = scratch().file("adjust.csv", content);
  const auto out = scratch().path("adjustment.json");
  CHECK(run_cli("adjust --input " + data + " --response y --protected a --tau 0.5 --seed 4"
                " --output " + out) == 0);
  const auto adj = fairqr::adjustment_from_json(fairqr::read_text_file(out));
  CHECK(adj.tau == 0.5);
  CHECK(adj.offsets.size() == 1);
  CHECK(adj.reference_category == 1);

  SUBCASE("targets switch the artifact to a before/after table") {
    const auto table_out = scratch().path("table.csv");
    CHECK(run_cli("adjust --input " + data + " --response y --protected a --seed 4"
                  " --targets 25 50 75 --format csv --output " + table_out) == 0);
    const auto text = fairqr::read_text_file(table_out);
    CHECK(text.rfind("series,25,50,75\n", 0) == 0);
    CHECK(text.find("after_group1,") != std::string::npos);
  }
  SUBCASE("same-sample reuse is accepted") {
    CHECK(run_cli("adjust --input " + data + " --response y --protected a --same-sample"
                  " --output " + scratch().path("same.json")) == 0);
  }
  SUBCASE("external adjustment and test files") {
    const auto out2 = scratch().path("ext.json");
    CHECK(run_cli("adjust --input " + data + " --response y --protected a --adjust-input " +
                  data + " --test-input " + data + " --targets 50 --output " + out2) == 0);
    const auto table = fairqr::table_from_json(fairqr::read_text_file(out2));
    CHECK(table.targets == std::vector<double>{0.5});
    CHECK(table.group_sizes[0] + table.group_sizes[1] == 200);
  }
  SUBCASE("test-input without adjust-input is a usage error") {
    CHECK(run_cli("adjust --input " + data + " --response y --protected a --test-input " +
                  data) == 1);
  }
}

TEST_CASE("eval reports fairness of supplied predictions") {
  const auto preds = scratch().file("preds.csv", "prediction\n1.5\n2.5\n2.5\n4.5\n");
  const auto out = scratch().path("report.json");
  CHECK(run_cli("eval --input " + tiny_csv() + " --response y --protected a --predictions " +
                preds + " --tau 0.5 --output " + out) == 0);
  const auto report = fairqr::fairness_report_from_json(fairqr::read_text_file(out));
  CHECK(report.group_sizes == std::vector<std::size_t>{2, 2});
  CHECK(report.effective_quantiles.size() == 2);

  const auto short_preds = scratch().file("short.csv", "prediction\n1.5\n");
  CHECK(run_cli("eval --input " + tiny_csv() + " --response y --protected a --predictions " +
                short_preds) == 2);
}

TEST_CASE("synth and rate consume config files and honor overrides") {
  const auto cfg = scratch().file("exp.cfg", "p = 3\nn = 200\n");
  const auto out = scratch().path("summary.json");
  CHECK(run_cli("synth --config " + cfg + " --trials 3 --seed 77 --output " + out) == 0);
  const auto summary = fairqr::experiment_from_json(fairqr::read_text_file(out));
  CHECK(summary.trials == 3);
  CHECK(summary.config.p == 3);
  CHECK(summary.config.base_seed == 77);  // --seed overrides the config

  const auto rate_out = scratch().path("rate.json");
  CHECK(run_cli("rate --config " + cfg + " --n-grid 100 200 400 --trials-per-n 3 --output " +
                rate_out) == 0);
  const auto rate = fairqr::rate_report_from_json(fairqr::read_text_file(rate_out));
  REQUIRE(rate.points.size() == 3);
  CHECK(rate.points[0].n == 100);

  CHECK(run_cli("synth --config /nonexistent.cfg --trials 1") == 2);
  const auto bad = scratch().file("bad.cfg", "n = 801\n");
  CHECK(run_cli("synth --config " + bad + " --trials 1") == 2);
}

TEST_CASE("artifacts are byte-identical across reruns") {
  const auto cfg = scratch().file("det.cfg", "p = 3\nn = 200\n");
  const auto first = scratch().path("det1.json");
  const auto second = scratch().path("det2.json");
  CHECK(run_cli("synth --config " + cfg + " --trials 3 --output " + first) == 0);
  CHECK(run_cli("synth --config " + cfg + " --trials 3 --output " + second) == 0);
  CHECK(fairqr::read_text_file(first) == fairqr::read_text_file(second));
  CHECK(fairqr::digest_file(first) == fairqr::digest_file(second));

  const auto fit1 = scratch().path("detfit1.json");
  const auto fit2 = scratch().path("detfit2.json");
  CHECK(run_cli("fit --input " + tiny_csv() + " --response y --output " + fit1) == 0);
  CHECK(run_cli("fit --input " + tiny_csv() + " --response y --output " + fit2) == 0);
  CHECK(fairqr::read_text_file(fit1) == fairqr::read_text_file(fit2));
}

TEST_CASE("hidden maintenance subcommands") {
  SUBCASE("oracle agrees with fit on a tiny instance") {
    const auto out = scratch().path("oracle.json");
    CHECK(run_cli("oracle --input " + tiny_csv() + " --response y --protected a --tau 0.5"
                  " --output " + out) == 0);
    const auto parsed = nlohmann::json::parse(fairqr::read_text_file(out));
    const double oracle_loss = parsed.at("loss").get<double>();

    const auto fit_out = scratch().path("oracle_fit.json");
    CHECK(run_cli("fit --input " + tiny_csv() + " --response y --protected a --tau 0.5"
                  " --output " + fit_out) == 0);
    const auto fit = fairqr::quantile_fit_from_json(fairqr::read_text_file(fit_out));
    CHECK(fit.primal_objective == doctest::Approx(oracle_loss).scale(1.0).epsilon(1e-9));
  }
  SUBCASE("fixture emits a loadable birthweight-schema csv") {
    const auto out = scratch().path("fixture.csv");
    CHECK(run_cli("fixture --rows 60 --effect 100 --output " + out) == 0);
    const auto text = fairqr::read_text_file(out);
    CHECK(text.rfind("weight,black,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 61);
    CHECK(run_cli("fit --input " + out + " --response weight --protected black --output " +
                  scratch().path("fixture_fit.json")) == 0);
  }
}

TEST_CASE("stdout is used when no output path is given") {
  const auto redirected = scratch().path("stdout.json");
  const std::string cmd = std::string(FAIRQR_CLI_PATH) + " fit --input " + tiny_csv() +
                          " --response y > " + redirected + " 2>/dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto fit = fairqr::quantile_fit_from_json(fairqr::read_text_file(redirected));
  CHECK(fit.beta.size() == 3);
  CHECK_FALSE(fs::exists(redirected + ".manifest.json"));
}
