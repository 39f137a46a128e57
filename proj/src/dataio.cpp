#include "rsnag/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rsnag {

namespace {

[[noreturn]] void parse_error(long line_no, const std::string& what) {
  throw std::invalid_argument("libsvm parse error at line " + std::to_string(line_no) + ": " + what);
}

bool parse_double_token(const std::string& token, double& out) {
  const char* begin = token.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + token.size() && token.size() > 0 && std::isfinite(out);
}

}  // namespace

Dataset parse_libsvm(const std::string& text, std::optional<int> expected_d,
                     const std::string& source) {
  if (text.empty()) throw std::invalid_argument("libsvm parse error: empty input");

  std::vector<double> labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  int max_index = 0;

  std::istringstream lines(text);
  std::string line;
  long line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;  // blank line

    double label_value = 0.0;
    if (!parse_double_token(token, label_value)) parse_error(line_no, "bad label '" + token + "'");
    if (label_value == 0.0) {
      label_value = -1.0;
    } else if (label_value != 1.0 && label_value != -1.0) {
      parse_error(line_no, "label outside {-1, 0, +1}: '" + token + "'");
    }

    std::vector<std::pair<int, double>> row;
    int prev_index = 0;
    while (tokens >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 >= token.size()) {
        parse_error(line_no, "bad feature token '" + token + "'");
      }
      int index = 0;
      try {
        std::size_t used = 0;
        index = std::stoi(token.substr(0, colon), &used);
        if (used != colon) parse_error(line_no, "bad feature index in '" + token + "'");
      } catch (const std::invalid_argument&) {
        parse_error(line_no, "bad feature index in '" + token + "'");
      } catch (const std::out_of_range&) {
        parse_error(line_no, "feature index out of range in '" + token + "'");
      }
      if (index < 1) parse_error(line_no, "feature indices are 1-based");
      if (index <= prev_index) parse_error(line_no, "feature indices must be strictly increasing");
      if (expected_d && index > *expected_d) {
        parse_error(line_no, "feature index " + std::to_string(index) + " exceeds expected dimension");
      }
      double value = 0.0;
      if (!parse_double_token(token.substr(colon + 1), value)) {
        parse_error(line_no, "bad feature value in '" + token + "'");
      }
      row.emplace_back(index, value);
      prev_index = index;
      max_index = std::max(max_index, index);
    }
    labels.push_back(label_value);
    rows.push_back(std::move(row));
  }

  if (labels.empty()) throw std::invalid_argument("libsvm parse error: no data lines");
  const int d = expected_d ? *expected_d : max_index;
  if (d < 1) throw std::invalid_argument("libsvm parse error: cannot infer the feature dimension");

  Dataset dataset;
  dataset.source = source;
  dataset.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), labels.size());
  dataset.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [index, value] : rows[i]) dataset.data(static_cast<Eigen::Index>(i), index - 1) = value;
  }
  return dataset;
}

Dataset load_libsvm_file(const std::string& path, std::optional<int> expected_d) {
  return parse_libsvm(read_text_file(path), expected_d, path);
}

std::string format_full_precision(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_trace_csv(std::ostream& os, const std::vector<LabeledTrace>& traces) {
  os << "method,sketch,d,r,seed,iter,oracle_calls,gap\n";
  for (const LabeledTrace& labeled : traces) {
    for (const TracePoint& point : labeled.trace.points) {
      os << labeled.method << ',' << labeled.sketch << ',' << labeled.d << ',' << labeled.r << ','
         << labeled.trace.seed << ',' << point.iter << ',' << point.oracle_calls << ','
         << format_full_precision(point.gap) << '\n';
    }
  }
}

void write_aggregate_csv(std::ostream& os, const std::vector<LabeledCurve>& curves) {
  os << "method,sketch,d,r,iter,oracle_calls,mean_gap,std_gap,n_seeds\n";
  for (const LabeledCurve& labeled : curves) {
    const AggregateCurve& curve = labeled.curve;
    for (std::size_t i = 0; i < curve.iters.size(); ++i) {
      os << labeled.method << ',' << labeled.sketch << ',' << labeled.d << ',' << labeled.r << ','
         << curve.iters[i] << ',' << curve.oracle_calls[i] << ','
         << format_full_precision(curve.mean_gap[i]) << ','
         << format_full_precision(curve.std_gap[i]) << ',' << curve.n_seeds << '\n';
    }
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw std::invalid_argument("config: unsupported schema_version");
  }
  ExperimentConfig config;
  const auto& problem = j.at("problem");
  config.problem_kind = problem.at("kind").get<std::string>();
  if (config.problem_kind == "quadratic") {
    config.instance = problem.at("instance").get<std::string>();
    config.d = problem.at("d").get<int>();
  } else if (config.problem_kind == "logistic") {
    config.dataset_path = problem.at("dataset").get<std::string>();
    if (problem.contains("expected_d") && !problem.at("expected_d").is_null()) {
      config.expected_d = problem.at("expected_d").get<int>();
    }
    const auto& mu = problem.at("mu");
    if (mu.is_string()) {
      if (mu.get<std::string>() != "1/n") throw std::invalid_argument("config: unknown mu rule");
      config.mu_rule = "1/n";
    } else {
      config.mu_rule = "literal";
      config.mu_value = mu.get<double>();
    }
  } else {
    throw std::invalid_argument("config: unknown problem kind '" + config.problem_kind + "'");
  }

  config.methods = j.at("methods").get<std::vector<std::string>>();
  for (const auto& sketch : j.at("sketches")) {
    config.sketches.push_back(
        {sketch.at("family").get<std::string>(), sketch.value("r", 1)});
  }
  config.oracle_budget = j.at("oracle_budget").get<long>();
  config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  config.record_every = j.value("record_every", 0L);
  if (j.contains("epsilon") && !j.at("epsilon").is_null()) {
    config.epsilon = j.at("epsilon").get<double>();
  }
  return config;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json problem;
  problem["kind"] = config.problem_kind;
  if (config.problem_kind == "quadratic") {
    problem["instance"] = config.instance;
    problem["d"] = config.d;
  } else {
    problem["dataset"] = config.dataset_path;
    if (config.expected_d) problem["expected_d"] = *config.expected_d;
    if (config.mu_rule == "1/n") {
      problem["mu"] = "1/n";
    } else {
      problem["mu"] = config.mu_value;
    }
  }
  nlohmann::json sketches = nlohmann::json::array();
  for (const auto& sketch : config.sketches) {
    sketches.push_back({{"family", sketch.family}, {"r", sketch.r}});
  }
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["problem"] = std::move(problem);
  j["methods"] = config.methods;
  j["sketches"] = std::move(sketches);
  j["oracle_budget"] = config.oracle_budget;
  j["seeds"] = config.seeds;
  j["record_every"] = config.record_every;
  if (config.epsilon) {
    j["epsilon"] = *config.epsilon;
  } else {
    j["epsilon"] = nullptr;
  }
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  return config_from_json(nlohmann::json::parse(read_text_file(path)));
}

Objective objective_from_config(const ExperimentConfig& config) {
  if (config.problem_kind == "quadratic") {
    return Objective::quadratic_instance(quadratic_kind_from_name(config.instance), config.d);
  }
  Dataset dataset = load_libsvm_file(config.dataset_path, config.expected_d);
  const double mu =
      config.mu_rule == "1/n" ? 1.0 / static_cast<double>(dataset.n()) : config.mu_value;
  return Objective::logistic_from_data(std::move(dataset.data), std::move(dataset.labels), mu);
}

nlohmann::json to_json(const MomentReport& report) {
  return {{"check", "sketch_moments"},
          {"se_rule", "pass requires every entrywise deviation within 5 standard errors"},
          {"family", family_name(report.family)},
          {"d", report.d},
          {"r", report.r},
          {"n_samples", report.n_samples},
          {"max_dev_unbiased", report.max_dev_unbiased},
          {"se_at_max_unbiased", report.se_at_max_unbiased},
          {"max_dev_second", report.max_dev_second},
          {"se_at_max_second", report.se_at_max_second},
          {"max_dev_interaction", report.max_dev_interaction},
          {"se_at_max_interaction", report.se_at_max_interaction},
          {"pass", report.pass},
          {"detail", report.detail}};
}

nlohmann::json to_json(const LyapunovProbe& probe) {
  return {{"check", "lyapunov_contraction"},
          {"se_rule", "pass requires the sample mean within 3 standard errors of the target"},
          {"method", probe.method},
          {"state_index", probe.state_index},
          {"n_samples", probe.n_samples},
          {"current", probe.current},
          {"target", probe.target},
          {"mean_next", probe.mean_next},
          {"se_next", probe.se_next},
          {"pass", probe.pass},
          {"detail", probe.detail}};
}

nlohmann::json to_json(const ReductionReport& report) {
  return {{"check", "classical_reduction"},
          {"method", report.method},
          {"steps", report.steps},
          {"max_deviation", report.max_deviation},
          {"pass", report.pass},
          {"detail", report.pass ? "" : "violated: full-rank sketch must reproduce the classical trajectory"}};
}

nlohmann::json to_json(const ConstantCheck& check) {
  return {{"check", "sketch_constants"},
          {"name", check.name},
          {"worst_margin", check.worst_margin},
          {"pass", check.pass},
          {"detail", check.detail}};
}

nlohmann::json to_json(const CommLedger& ledger) {
  return {{"rounds", ledger.rounds},
          {"n_workers", ledger.n_workers},
          {"r", ledger.r},
          {"uplink_scalars_per_worker_per_round", ledger.uplink_scalars_per_worker_per_round},
          {"total_uplink_scalars", ledger.total_uplink_scalars},
          {"seed_broadcasts", ledger.seed_broadcasts},
          {"bits_per_scalar", ledger.bits_per_scalar},
          {"total_uplink_bits", ledger.total_uplink_bits()}};
}

nlohmann::json make_report(std::vector<nlohmann::json> checks) {
  bool all_pass = true;
  for (const auto& check : checks) all_pass = all_pass && check.value("pass", true);
  nlohmann::json report;
  report["schema_version"] = kSchemaVersion;
  report["pass"] = all_pass;
  report["checks"] = std::move(checks);
  return report;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace rsnag
