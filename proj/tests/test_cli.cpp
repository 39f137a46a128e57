// End-to-end checks of the command-line tool: exit codes, output-file
// contracts, rerun reproducibility, and the r-sweep ordering.
//
// usage: test_cli <path-to-cli> <config-dir>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rsnag/dataio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;

void expect(bool ok, const std::string& what) {
  std::cout << (ok ? "ok" : "FAILED") << "  " << what << "\n";
  if (!ok) ++g_failures;
}

int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <path-to-cli> [config-dir]\n";
    return 1;
  }
  const fs::path cli = argv[1];
  const fs::path config_dir = argc > 2 ? argv[2] : "configs";
  const fs::path work = fs::temp_directory_path() / "rsnag_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);

  {  // a 4-sketch single-method grid: 40 trace groups and 4 aggregate curves
    const fs::path config_path = work / "grid.json";
    rsnag::write_text_file(config_path.string(), R"({
      "schema_version": 1,
      "problem": {"kind": "quadratic", "instance": "convex_diag", "d": 200},
      "methods": ["rs_nag_c"],
      "sketches": [
        {"family": "haar", "r": 1},
        {"family": "coordinate", "r": 1},
        {"family": "gaussian", "r": 1},
        {"family": "identity", "r": 200}
      ],
      "oracle_budget": 400,
      "seeds": [1,2,3,4,5,6,7,8,9,10],
      "record_every": 1,
      "epsilon": null
    })");
    const fs::path out = work / "grid_out";
    const int rc = run_command(quoted(cli) + " run --config " + quoted(config_path) + " --out " +
                               quoted(out) + " > /dev/null");
    expect(rc == 0, "run exits 0");

    std::ifstream traces(out / "run_traces.csv");
    std::string line;
    std::getline(traces, line);
    std::set<std::string> groups;
    std::map<std::string, long> group_rows;
    while (std::getline(traces, line)) {
      std::istringstream fields(line);
      std::string method, sketch, d, r, seed;
      std::getline(fields, method, ',');
      std::getline(fields, sketch, ',');
      std::getline(fields, d, ',');
      std::getline(fields, r, ',');
      std::getline(fields, seed, ',');
      groups.insert(method + "/" + sketch + "/" + seed);
    }
    expect(groups.size() == 40, "40 per-seed trace groups");

    std::ifstream curves(out / "run_aggregate.csv");
    std::getline(curves, line);
    std::set<std::string> curve_groups;
    while (std::getline(curves, line)) {
      curve_groups.insert(line.substr(0, line.find_last_of(',')).substr(0, line.find(',', line.find(',') + 1)));
    }
    expect(curve_groups.size() == 4, "4 aggregate curves");

    const json summary = json::parse(rsnag::read_text_file((out / "run_summary.json").string()));
    expect(summary["cells"].size() == 4, "summary has 4 cells");
    expect(summary["schema_version"] == 1, "summary carries schema_version");

    // reruns with identical inputs reproduce identical files
    const fs::path out2 = work / "grid_out_repeat";
    run_command(quoted(cli) + " run --config " + quoted(config_path) + " --out " + quoted(out2) +
                " > /dev/null");
    expect(rsnag::read_text_file((out / "run_traces.csv").string()) ==
               rsnag::read_text_file((out2 / "run_traces.csv").string()),
           "rerun reproduces the trace file byte for byte");
  }

  {  // sketch-dimension sweep: final mean gap grows with r on a dense instance
    const fs::path config_path = work / "sweep.json";
    rsnag::write_text_file(config_path.string(), R"({
      "schema_version": 1,
      "problem": {"kind": "quadratic", "instance": "convex_dense", "d": 200},
      "methods": ["rs_nag_c"],
      "sketches": [{"family": "haar", "r": 1}],
      "oracle_budget": 2000,
      "seeds": [1,2,3,4,5,6,7,8,9,10],
      "record_every": 10,
      "epsilon": null
    })");
    const fs::path out = work / "sweep_out";
    const int rc = run_command(quoted(cli) + " sweep-r --config " + quoted(config_path) +
                               " --r-grid 1 10 100 --out " + quoted(out) + " > /dev/null");
    expect(rc == 0, "sweep-r exits 0");
    const json summary = json::parse(rsnag::read_text_file((out / "sweep_summary.json").string()));
    std::map<int, double> final_gap;
    double argmin_r = 0;
    for (const auto& cell : summary["cells"]) {
      if (cell.contains("final_mean_gap")) {
        final_gap[cell["r"].get<int>()] = cell["final_mean_gap"].get<double>();
      } else {
        argmin_r = cell["argmin_oracle_factor_r"].get<long>();
      }
    }
    expect(final_gap.size() == 3, "three sweep cells");
    expect(final_gap[1] <= final_gap[10] && final_gap[10] <= final_gap[100],
           "final mean gap nondecreasing in r");
    expect(argmin_r == 1, "oracle factor argmin at r = 1");

    const int bad = run_command(quoted(cli) + " sweep-r --config " + quoted(config_path) +
                                " --r-grid 300 --out " + quoted(work / "sweep_bad") +
                                " > /dev/null 2>&1");
    expect(bad == 2, "r above d exits 2");
  }

  {  // config errors
    const int rc = run_command(quoted(cli) + " run --config " + quoted(work / "missing.json") +
                               " --out " + quoted(work / "x") + " > /dev/null 2>&1");
    expect(rc == 2, "missing config exits 2");

    const fs::path config_path = work / "missing_dataset.json";
    rsnag::write_text_file(config_path.string(), R"({
      "schema_version": 1,
      "problem": {"kind": "logistic", "dataset": "/definitely/not/here.libsvm", "mu": "1/n"},
      "methods": ["rs_nag_sc"],
      "sketches": [{"family": "haar", "r": 1}],
      "oracle_budget": 100,
      "seeds": [1]
    })");
    const int rc2 = run_command(quoted(cli) + " run --config " + quoted(config_path) + " --out " +
                                quoted(work / "y") + " > /dev/null 2>&1");
    expect(rc2 == 2, "missing dataset path exits 2");
  }

  {  // verify with the identity family only: trivially zero deviations
    const int rc = run_command(quoted(cli) + " verify --families identity --out " +
                               quoted(work / "verify_out") + " > /dev/null");
    expect(rc == 0, "verify --families identity exits 0");
    const json report =
        json::parse(rsnag::read_text_file((work / "verify_out" / "verify_report.json").string()));
    expect(report["pass"] == true, "identity verify report passes");
  }

  {  // distsim smoke through the binary
    const int rc = run_command(quoted(cli) +
                               " distsim --workers 2 --rounds 50 --method rs_gd_sc --family haar"
                               " --r 1 --instance sc_diag --d 30 --out " +
                               quoted(work / "dist_out") + " > /dev/null");
    expect(rc == 0, "distsim exits 0");
  }

  std::cout << (g_failures == 0 ? "CLI TESTS PASSED" : "CLI TESTS FAILED") << std::endl;
  return g_failures;
}
