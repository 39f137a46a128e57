#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rsnag/optimizers.hpp"
#include "rsnag/problems.hpp"
#include "rsnag/sketches.hpp"

namespace rsnag {

// Budgeted run under the directional-derivative oracle model: a sketched
// gradient costs r queries, a full gradient costs d.
struct RunConfig {
  Method method = Method::rs_nag_c;
  SketchFamily family = SketchFamily::haar;
  int r = 1;
  long oracle_budget = 10000;
  std::vector<std::uint64_t> seeds = {1};
  long record_every = 1;
  std::optional<double> epsilon;  // stop once gap <= epsilon
};

struct TracePoint {
  long iter = 0;
  long oracle_calls = 0;
  double gap = 0.0;
};

struct RunTrace {
  std::uint64_t seed = 0;
  std::vector<TracePoint> points;
  Eigen::VectorXd final_x;
  long iterations = 0;
  long oracle_calls = 0;
  double f_ref = 0.0;
};

struct AggregateCurve {
  std::vector<long> iters;
  std::vector<long> oracle_calls;
  std::vector<double> mean_gap;
  std::vector<double> std_gap;  // sample standard deviation across seeds
  int n_seeds = 0;
};

struct DivergedRunError : std::runtime_error {
  DivergedRunError(const std::string& what, RunTrace partial)
      : std::runtime_error(what), partial(std::move(partial)) {}
  RunTrace partial;
};

long oracle_cost_per_iteration(SketchFamily family, int d, int r);

// Trace thinning default: every iterate at desk scale, every tenth beyond.
long default_record_every(int d, long oracle_budget);

// The x0 ~ N(0, I_d) draw used by run_single for a given seed.
Eigen::VectorXd initial_point(int d, std::uint64_t seed);

// Gaussian x0 from the seed's init stream, then fixed-parameter stepping with
// per-iteration sketch streams derived from (seed, k). `f_ref` is subtracted
// to report gaps; compute it once per problem (see reference_gap_base).
RunTrace run_single(const RunConfig& config, const Objective& obj, std::uint64_t seed, double f_ref);

// f* when the problem knows it, otherwise a tight reference solve.
double reference_gap_base(const Objective& obj, double tol = 1e-10);

struct RunSet {
  std::vector<RunTrace> traces;
  double f_ref = 0.0;
};

RunSet run(const RunConfig& config, const Objective& obj);

AggregateCurve aggregate(const std::vector<RunTrace>& traces);

}  // namespace rsnag
