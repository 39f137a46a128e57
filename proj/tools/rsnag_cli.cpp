#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rsnag/dataio.hpp"

namespace fs = std::filesystem;
using namespace rsnag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDiverged = 3;

struct CellResult {
  std::string method;
  std::string sketch;
  int r = 0;
  double omega_c = 0.0;
  double ell_c = 0.0;
  double oracle_factor_c = 0.0;
  std::vector<RunTrace> traces;
  AggregateCurve curve;
};

Objective build_instance(const std::string& instance, int d) {
  return Objective::quadratic_instance(quadratic_kind_from_name(instance), d);
}

CellResult run_cell(const ExperimentConfig& config, const Objective& obj, Method method,
                    const ExperimentConfig::SketchSpec& sketch_spec, double f_ref) {
  const SketchFamily family = family_from_name(sketch_spec.family);
  const int r = family == SketchFamily::identity ? obj.dim() : sketch_spec.r;
  const SketchDistribution dist(family, obj.dim(), r);

  RunConfig run_config;
  run_config.method = method;
  run_config.family = family;
  run_config.r = r;
  run_config.oracle_budget = config.oracle_budget;
  run_config.seeds = config.seeds;
  run_config.record_every = config.record_every > 0
                                ? config.record_every
                                : default_record_every(obj.dim(), config.oracle_budget);
  run_config.epsilon = config.epsilon;

  const SketchConstants constants = sketch_constants(dist, obj.smoothness());
  CellResult cell;
  cell.method = method_name(method);
  cell.sketch = sketch_spec.family;
  cell.r = r;
  cell.omega_c = constants.omega;
  cell.ell_c = constants.ell;
  cell.oracle_factor_c = constants.oracle_factor;
  for (std::uint64_t seed : config.seeds) {
    cell.traces.push_back(run_single(run_config, obj, seed, f_ref));
  }
  cell.curve = aggregate(cell.traces);
  return cell;
}

nlohmann::json summarize_cell(const CellResult& cell, const Objective& obj, double f_ref,
                              const std::vector<std::uint64_t>& seeds) {
  nlohmann::json j;
  j["method"] = cell.method;
  j["sketch"] = cell.sketch;
  j["r"] = cell.r;
  j["omega"] = cell.omega_c;
  j["ell"] = cell.ell_c;
  j["oracle_factor"] = cell.oracle_factor_c;
  j["final_iter"] = cell.curve.iters.back();
  j["final_oracle_calls"] = cell.curve.oracle_calls.back();
  j["final_mean_gap"] = cell.curve.mean_gap.back();
  j["final_std_gap"] = cell.curve.std_gap.back();
  j["f_ref"] = f_ref;

  // Worst-case envelope at the final iteration, averaged over the seeds'
  // initial conditions.
  const Method method = method_from_name(cell.method);
  const long n_final = cell.curve.iters.back();
  double initial = 0.0;
  bool have_initial = false;
  if (method == Method::rs_nag_c || method == Method::rs_gd_convex) {
    if (obj.optimum_point()) {
      double sum = 0.0;
      for (std::uint64_t seed : seeds) {
        sum += (initial_point(obj.dim(), seed) - *obj.optimum_point()).squaredNorm();
      }
      initial = std::sqrt(sum / static_cast<double>(seeds.size()));
      have_initial = true;
    }
  } else {
    double sum = 0.0;
    for (std::uint64_t seed : seeds) sum += obj.value(initial_point(obj.dim(), seed)) - f_ref;
    initial = sum / static_cast<double>(seeds.size());
    have_initial = true;
  }
  if (have_initial && n_final >= 1) {
    j["theoretical_bound_final"] =
        theoretical_bound(method, obj, cell.omega_c, cell.ell_c, n_final, initial);
  } else {
    j["theoretical_bound_final"] = nullptr;
  }
  return j;
}

void write_cells(const fs::path& out_dir, const std::string& stem,
                 const std::vector<CellResult>& cells, int d) {
  std::vector<LabeledTrace> labeled;
  std::vector<LabeledCurve> curves;
  for (const CellResult& cell : cells) {
    for (const RunTrace& trace : cell.traces) {
      labeled.push_back({cell.method, cell.sketch, d, cell.r, trace});
    }
    curves.push_back({cell.method, cell.sketch, d, cell.r, cell.curve});
  }
  std::ostringstream trace_csv;
  write_trace_csv(trace_csv, labeled);
  write_text_file((out_dir / (stem + "_traces.csv")).string(), trace_csv.str());
  std::ostringstream curve_csv;
  write_aggregate_csv(curve_csv, curves);
  write_text_file((out_dir / (stem + "_aggregate.csv")).string(), curve_csv.str());
}

int cmd_run(const std::string& config_path, const std::string& out_dir_flag,
            std::optional<long> seeds_override, std::optional<long> budget_override) {
  ExperimentConfig config;
  std::optional<Objective> obj;
  try {
    config = load_config_file(config_path);
    if (seeds_override) {
      config.seeds.clear();
      for (long s = 1; s <= *seeds_override; ++s) {
        config.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
    if (budget_override) config.oracle_budget = *budget_override;
    if (config.seeds.empty()) throw std::invalid_argument("config: no seeds");
    obj = objective_from_config(config);
  } catch (const std::exception& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  }

  const fs::path out_dir(out_dir_flag);
  fs::create_directories(out_dir);

  std::vector<CellResult> cells;
  double f_ref = 0.0;
  try {
    f_ref = reference_gap_base(*obj);
    for (const std::string& method_str : config.methods) {
      const Method method = method_from_name(method_str);
      for (const auto& sketch_spec : config.sketches) {
        cells.push_back(run_cell(config, *obj, method, sketch_spec, f_ref));
      }
    }
  } catch (const DivergedRunError& err) {
    write_cells(out_dir, "run", cells, obj->dim());
    std::cerr << "divergence: " << err.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  }

  write_cells(out_dir, "run", cells, obj->dim());
  nlohmann::json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["config"] = config_to_json(config);
  summary["f_ref"] = f_ref;
  summary["cells"] = nlohmann::json::array();
  for (const CellResult& cell : cells) {
    summary["cells"].push_back(summarize_cell(cell, *obj, f_ref, config.seeds));
  }
  write_text_file((out_dir / "run_summary.json").string(), summary.dump(2) + "\n");
  std::cout << "wrote " << cells.size() << " cells to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_sweep_r(const std::string& config_path, const std::string& out_dir_flag,
                std::vector<long> r_grid, std::optional<long> seeds_override,
                std::optional<long> budget_override) {
  ExperimentConfig config;
  std::optional<Objective> obj;
  try {
    config = load_config_file(config_path);
    if (seeds_override) {
      config.seeds.clear();
      for (long s = 1; s <= *seeds_override; ++s) {
        config.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
    if (budget_override) config.oracle_budget = *budget_override;
    if (config.seeds.empty()) throw std::invalid_argument("config: no seeds");
    obj = objective_from_config(config);
    if (r_grid.empty()) throw std::invalid_argument("sweep-r: empty r grid");
    for (long r : r_grid) {
      if (r < 1 || r > obj->dim()) throw std::invalid_argument("sweep-r: r outside [1, d]");
    }
  } catch (const std::exception& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  }

  const fs::path out_dir(out_dir_flag);
  fs::create_directories(out_dir);

  std::vector<CellResult> cells;
  nlohmann::json summary_cells = nlohmann::json::array();
  try {
    const double f_ref = reference_gap_base(*obj);
    for (const std::string& method_str : config.methods) {
      const Method method = method_from_name(method_str);
      for (const auto& sketch_spec : config.sketches) {
        if (family_from_name(sketch_spec.family) == SketchFamily::identity) continue;
        double best_factor = 0.0;
        long best_r = 0;
        for (long r : r_grid) {
          ExperimentConfig::SketchSpec spec{sketch_spec.family, static_cast<int>(r)};
          cells.push_back(run_cell(config, *obj, method, spec, f_ref));
          const CellResult& cell = cells.back();
          summary_cells.push_back(summarize_cell(cell, *obj, f_ref, config.seeds));
          if (best_r == 0 || cell.oracle_factor_c < best_factor) {
            best_factor = cell.oracle_factor_c;
            best_r = r;
          }
        }
        summary_cells.push_back({{"method", method_name(method)},
                                 {"sketch", sketch_spec.family},
                                 {"argmin_oracle_factor_r", best_r},
                                 {"min_oracle_factor", best_factor}});
      }
    }
  } catch (const DivergedRunError& err) {
    write_cells(out_dir, "sweep", cells, obj->dim());
    std::cerr << "divergence: " << err.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  }

  write_cells(out_dir, "sweep", cells, obj->dim());
  nlohmann::json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["config"] = config_to_json(config);
  summary["cells"] = std::move(summary_cells);
  write_text_file((out_dir / "sweep_summary.json").string(), summary.dump(2) + "\n");
  std::cout << "wrote " << cells.size() << " sweep cells to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& out_dir_flag, std::vector<std::string> families, long samples,
               long lyapunov_samples, std::uint64_t seed) {
  std::vector<nlohmann::json> checks;
  bool all_pass = true;
  auto note = [&](const nlohmann::json& j) {
    all_pass = all_pass && j.value("pass", false);
    std::cout << (j.value("pass", false) ? "pass" : "FAIL") << "  "
              << j.value("check", std::string("?"));
    if (j.contains("family")) std::cout << "  " << j["family"].get<std::string>();
    if (j.contains("name")) std::cout << "  " << j["name"].get<std::string>();
    if (j.contains("method")) std::cout << "  " << j["method"].get<std::string>();
    if (j.contains("d")) std::cout << "  d=" << j["d"].get<int>() << " r=" << j["r"].get<int>();
    if (!j.value("pass", false) && j.contains("detail")) {
      std::cout << "  " << j["detail"].get<std::string>();
    }
    std::cout << "\n";
    checks.push_back(j);
  };

  try {
    for (const std::string& family_str : families) {
      const SketchFamily family = family_from_name(family_str);
      for (const ConstantCheck& check : check_constants(family, 40, 3, seed)) {
        nlohmann::json j = to_json(check);
        j["family"] = family_str;
        note(j);
      }
      if (family == SketchFamily::identity) {
        Rng rng(seed);
        const SmoothnessModel model = random_psd_model(10, rng);
        note(to_json(check_moments(SketchDistribution(family, 10, 10), model, 2000, seed)));
        continue;
      }
      for (auto [d, r] : {std::pair{10, 1}, std::pair{10, 3}, std::pair{20, 5}}) {
        Rng rng(seed + d + r);
        const SmoothnessModel model = random_psd_model(d, rng);
        note(to_json(check_moments(SketchDistribution(family, d, r), model, samples, seed)));
      }
    }

    {
      Rng rng(seed + 101);
      const Objective convex = Objective::quadratic(random_psd_model(20, rng));
      note(to_json(check_reduction_convex(convex, 50, seed)));
      const Objective strong = Objective::quadratic(random_psd_model(20, rng, 0.1));
      note(to_json(check_reduction_sc(strong, 50, seed)));
    }

    {
      const std::vector<long> probe_iters = {1, 5, 20, 60, 150};
      const Objective convex = Objective::quadratic_instance(QuadraticKind::convex_diag, 50);
      const SketchDistribution dist(SketchFamily::haar, 50, 1);
      for (const ConvexState& state : convex_probe_states(convex, dist, probe_iters, seed)) {
        note(to_json(check_lyapunov_convex(state, convex, dist, lyapunov_samples,
                                           seed + static_cast<std::uint64_t>(state.k))));
      }
      const Objective strong = Objective::quadratic_instance(QuadraticKind::sc_diag, 50);
      for (const StrongState& state : strong_probe_states(strong, dist, probe_iters, seed)) {
        note(to_json(check_lyapunov_sc(state, strong, dist, lyapunov_samples,
                                       seed + static_cast<std::uint64_t>(state.k))));
      }
    }
  } catch (const std::exception& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  }

  if (!out_dir_flag.empty()) {
    fs::create_directories(out_dir_flag);
    write_text_file((fs::path(out_dir_flag) / "verify_report.json").string(),
                    make_report(std::move(checks)).dump(2) + "\n");
  }
  std::cout << (all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
  return all_pass ? kExitOk : kExitVerifyFailed;
}

int cmd_distsim(const std::string& out_dir_flag, int workers, long rounds,
                const std::string& method_str, const std::string& family_str, int r,
                const std::string& instance, int d, std::uint64_t seed, int bits) {
  try {
    const Objective obj = build_instance(instance, d);
    const WorkerSet set = partition_quadratic(obj, workers, seed);

    RunConfig config;
    config.method = method_from_name(method_str);
    config.family = family_from_name(family_str);
    config.r = config.family == SketchFamily::identity ? d : r;
    config.oracle_budget = rounds * oracle_cost_per_iteration(config.family, d, config.r);

    const RunTrace local = run_single(config, obj, seed, 0.0);
    const auto [trace, ledger] = dist_run(set, config, seed, 0.0, bits);

    double max_dev = (trace.final_x - local.final_x).norm();
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
      max_dev = std::max(max_dev, std::abs(trace.points[i].gap - local.points[i].gap));
    }
    const bool pass = max_dev <= 1e-12;

    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["check"] = "distributed_equivalence";
    j["method"] = method_str;
    j["family"] = family_str;
    j["workers"] = workers;
    j["rounds"] = ledger.rounds;
    j["max_deviation"] = max_dev;
    j["pass"] = pass;
    if (!pass) {
      j["detail"] = "violated: shared-sketch iterates must coincide with the single-machine run";
    }
    j["ledger"] = to_json(ledger);
    if (!out_dir_flag.empty()) {
      fs::create_directories(out_dir_flag);
      write_text_file((fs::path(out_dir_flag) / "distsim_report.json").string(), j.dump(2) + "\n");
    }
    std::cout << j.dump(2) << "\n";
    return pass ? kExitOk : kExitVerifyFailed;
  } catch (const std::exception& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  }
}

int cmd_constants(const std::string& out_dir_flag, const std::string& dataset_path,
                  std::optional<int> expected_d, const std::string& mu_text,
                  const std::string& instance, int d, bool csv) {
  try {
    nlohmann::json row;
    std::optional<SmoothnessModel> model;
    if (!dataset_path.empty()) {
      const Dataset dataset = load_libsvm_file(dataset_path, expected_d);
      double mu = 0.0;
      if (mu_text == "1/n") {
        mu = 1.0 / static_cast<double>(dataset.n());
      } else {
        mu = std::stod(mu_text);
      }
      const Objective obj = Objective::logistic_from_data(dataset.data, dataset.labels, mu);
      model = obj.smoothness();
      row["source"] = dataset_path;
      row["n"] = dataset.n();
      row["mu"] = mu;
    } else if (!instance.empty()) {
      const Objective obj = build_instance(instance, d);
      model = obj.smoothness();
      row["source"] = instance;
      row["n"] = nullptr;
      row["mu"] = obj.mu();
    } else {
      throw std::invalid_argument("constants: provide --dataset or --instance");
    }

    row["d"] = model->dim();
    row["L"] = model->spectral_norm();
    row["r_eff"] = model->effective_rank();
    row["delta_diag"] = model->diag_ratio();
    row["Q_H"] = q_at_one(SketchFamily::haar, model->dim(), *model);
    row["Q_G"] = q_at_one(SketchFamily::gaussian, model->dim(), *model);
    row["Q_C"] = q_at_one(SketchFamily::coordinate, model->dim(), *model);

    nlohmann::json out;
    out["schema_version"] = kSchemaVersion;
    out["rows"] = nlohmann::json::array({row});
    std::cout << out.dump(2) << "\n";
    if (!out_dir_flag.empty()) {
      fs::create_directories(out_dir_flag);
      write_text_file((fs::path(out_dir_flag) / "constants.json").string(), out.dump(2) + "\n");
      if (csv) {
        std::ostringstream table;
        table << "source,d,n,L,r_eff,delta_diag,Q_H,Q_G,Q_C\n";
        table << row["source"].get<std::string>() << ',' << row["d"].get<int>() << ',';
        if (!row["n"].is_null()) table << row["n"].get<int>();
        table << ',' << format_full_precision(row["L"].get<double>()) << ','
              << format_full_precision(row["r_eff"].get<double>()) << ','
              << format_full_precision(row["delta_diag"].get<double>()) << ','
              << format_full_precision(row["Q_H"].get<double>()) << ','
              << format_full_precision(row["Q_G"].get<double>()) << ','
              << format_full_precision(row["Q_C"].get<double>()) << '\n';
        write_text_file((fs::path(out_dir_flag) / "constants.csv").string(), table.str());
      }
    }
    return kExitOk;
  } catch (const std::exception& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized-subspace accelerated gradient toolkit"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "execute the configured method/sketch grid");
  std::string run_config_path, run_out = "out";
  std::optional<long> run_seeds, run_budget;
  run_cmd->add_option("--config", run_config_path, "experiment config JSON")->required();
  run_cmd->add_option("--out", run_out, "output directory");
  run_cmd->add_option("--seeds", run_seeds, "override: use seeds 1..N");
  run_cmd->add_option("--budget", run_budget, "override: oracle budget");

  auto* sweep_cmd = app.add_subcommand("sweep-r", "sweep the sketch dimension r");
  std::string sweep_config_path, sweep_out = "out";
  std::vector<long> sweep_grid;
  std::optional<long> sweep_seeds, sweep_budget;
  sweep_cmd->add_option("--config", sweep_config_path, "experiment config JSON")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  sweep_cmd->add_option("--r-grid", sweep_grid, "r values to sweep")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "override: use seeds 1..N");
  sweep_cmd->add_option("--budget", sweep_budget, "override: oracle budget");

  auto* verify_cmd = app.add_subcommand("verify", "run the assumption and identity checkers");
  std::string verify_out;
  std::vector<std::string> verify_families = {"haar", "coordinate", "gaussian", "identity"};
  long verify_samples = 200000;
  long verify_lyap_samples = 20000;
  std::uint64_t verify_seed = 2024;
  verify_cmd->add_option("--out", verify_out, "directory for verify_report.json");
  verify_cmd->add_option("--families", verify_families, "sketch families to check");
  verify_cmd->add_option("--samples", verify_samples, "Monte-Carlo samples per moment check");
  verify_cmd->add_option("--lyapunov-samples", verify_lyap_samples, "samples per contraction probe");
  verify_cmd->add_option("--seed", verify_seed, "base seed");

  auto* dist_cmd = app.add_subcommand("distsim", "shared-sketch distributed simulation");
  std::string dist_out, dist_method = "rs_nag_sc", dist_family = "haar", dist_instance = "sc_diag";
  int dist_workers = 4, dist_r = 1, dist_d = 50, dist_bits = 64;
  long dist_rounds = 200;
  std::uint64_t dist_seed = 1;
  dist_cmd->add_option("--out", dist_out, "directory for distsim_report.json");
  dist_cmd->add_option("--workers", dist_workers, "number of workers");
  dist_cmd->add_option("--rounds", dist_rounds, "protocol rounds");
  dist_cmd->add_option("--method", dist_method, "rs_nag_c | rs_nag_sc | rs_gd_convex | rs_gd_sc");
  dist_cmd->add_option("--family", dist_family, "sketch family");
  dist_cmd->add_option("--r", dist_r, "sketch dimension");
  dist_cmd->add_option("--instance", dist_instance, "quadratic instance");
  dist_cmd->add_option("--d", dist_d, "ambient dimension");
  dist_cmd->add_option("--seed", dist_seed, "run seed");
  dist_cmd->add_option("--bits", dist_bits, "scalar width for the ledger (32 or 64)");

  auto* const_cmd = app.add_subcommand("constants", "dataset / instance constant table");
  std::string const_out, const_dataset, const_mu = "1/n", const_instance;
  std::optional<int> const_expected_d;
  int const_d = 0;
  bool const_csv = false;
  const_cmd->add_option("--out", const_out, "directory for constants.json");
  const_cmd->add_option("--dataset", const_dataset, "LIBSVM file");
  const_cmd->add_option("--expected-d", const_expected_d, "expected feature dimension");
  const_cmd->add_option("--mu", const_mu, "ridge: '1/n' or a literal value");
  const_cmd->add_option("--instance", const_instance, "quadratic instance name");
  const_cmd->add_option("--d", const_d, "quadratic dimension");
  const_cmd->add_flag("--csv", const_csv, "also write constants.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (run_cmd->parsed()) return cmd_run(run_config_path, run_out, run_seeds, run_budget);
  if (sweep_cmd->parsed()) {
    return cmd_sweep_r(sweep_config_path, sweep_out, sweep_grid, sweep_seeds, sweep_budget);
  }
  if (verify_cmd->parsed()) {
    return cmd_verify(verify_out, verify_families, verify_samples, verify_lyap_samples, verify_seed);
  }
  if (dist_cmd->parsed()) {
    return cmd_distsim(dist_out, dist_workers, dist_rounds, dist_method, dist_family, dist_r,
                       dist_instance, dist_d, dist_seed, dist_bits);
  }
  if (const_cmd->parsed()) {
    return cmd_constants(const_out, const_dataset, const_expected_d, const_mu, const_instance,
                         const_d, const_csv);
  }
  return kExitConfigError;
}
