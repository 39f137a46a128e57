#pragma once

#include <json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rsnag/distsim.hpp"
#include "rsnag/runner.hpp"
#include "rsnag/verify.hpp"

namespace rsnag {

constexpr int kSchemaVersion = 1;

struct Dataset {
  Eigen::MatrixXd data;    // n x d, dense
  Eigen::VectorXd labels;  // entries in {-1, +1}
  std::string source;

  int n() const { return static_cast<int>(data.rows()); }
  int d() const { return static_cast<int>(data.cols()); }
};

// "label idx:val idx:val ..." with 1-based strictly increasing indices per
// line. Labels +1/-1 pass through; 0/1 labels map to -1/+1. Anything else is
// rejected with the offending line number.
Dataset parse_libsvm(const std::string& text, std::optional<int> expected_d = std::nullopt,
                     const std::string& source = "");
Dataset load_libsvm_file(const std::string& path, std::optional<int> expected_d = std::nullopt);

struct LabeledTrace {
  std::string method;
  std::string sketch;
  int d = 0;
  int r = 0;
  RunTrace trace;
};

// Header "method,sketch,d,r,seed,iter,oracle_calls,gap"; gaps printed with 17
// significant digits so values round-trip exactly.
void write_trace_csv(std::ostream& os, const std::vector<LabeledTrace>& traces);

struct LabeledCurve {
  std::string method;
  std::string sketch;
  int d = 0;
  int r = 0;
  AggregateCurve curve;
};

void write_aggregate_csv(std::ostream& os, const std::vector<LabeledCurve>& curves);

// Experiment description: one problem, a method x sketch grid, and the
// budget/seed schedule shared by every cell.
struct ExperimentConfig {
  struct SketchSpec {
    std::string family;
    int r = 1;
    bool operator==(const SketchSpec&) const = default;
  };

  std::string problem_kind;  // "quadratic" | "logistic"
  std::string instance;      // quadratic instance name
  int d = 0;                 // quadratic dimension
  std::string dataset_path;  // logistic data source
  std::optional<int> expected_d;
  std::string mu_rule;  // "1/n" or "literal"
  double mu_value = 0.0;

  std::vector<std::string> methods;
  std::vector<SketchSpec> sketches;
  long oracle_budget = 10000;
  std::vector<std::uint64_t> seeds;
  long record_every = 0;  // 0 = choose by default_record_every(d, budget)
  std::optional<double> epsilon;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config_file(const std::string& path);

// Builds the configured objective (and parses the dataset when needed).
Objective objective_from_config(const ExperimentConfig& config);

nlohmann::json to_json(const MomentReport& report);
nlohmann::json to_json(const LyapunovProbe& probe);
nlohmann::json to_json(const ReductionReport& report);
nlohmann::json to_json(const ConstantCheck& check);
nlohmann::json to_json(const CommLedger& ledger);

// Wraps check entries with the schema version and an overall pass flag.
nlohmann::json make_report(std::vector<nlohmann::json> checks);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

std::string format_full_precision(double value);

}  // namespace rsnag
