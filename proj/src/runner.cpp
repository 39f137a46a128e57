#include "rsnag/runner.hpp"

#include <cmath>
#include <stdexcept>

#include "rsnag/rng.hpp"

namespace rsnag {

long oracle_cost_per_iteration(SketchFamily family, int d, int r) {
  if (r < 1 || r > d) throw std::invalid_argument("runner: r must satisfy 1 <= r <= d");
  return family == SketchFamily::identity ? d : r;
}

long default_record_every(int d, long oracle_budget) {
  return (d <= 1000 && oracle_budget <= 100000) ? 1 : 10;
}

double reference_gap_base(const Objective& obj, double tol) {
  if (obj.optimum_value()) return *obj.optimum_value();
  return obj.reference_value(tol);
}

Eigen::VectorXd initial_point(int d, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, Rng::Stream::init, 0);
  Eigen::VectorXd x0(d);
  for (int i = 0; i < d; ++i) x0[i] = rng.normal();
  return x0;
}

namespace {

struct Stepper {
  // Exactly one of the states is active, selected by the method.
  Method method;
  ConvexState convex;
  StrongState strong;
  GdState gd;

  const Eigen::VectorXd& x() const {
    switch (method) {
      case Method::rs_nag_c: return convex.x;
      case Method::rs_nag_sc: return strong.x;
      default: return gd.x;
    }
  }

  void step(const Objective& obj, const SketchMatrix& sketch) {
    switch (method) {
      case Method::rs_nag_c: rs_nag_c_step(convex, obj, sketch); break;
      case Method::rs_nag_sc: rs_nag_sc_step(strong, obj, sketch); break;
      default: rs_gd_step(gd, obj, sketch); break;
    }
  }
};

Stepper make_stepper(const RunConfig& config, const Objective& obj, Eigen::VectorXd x0,
                     double omega_c, double ell_c) {
  Stepper s;
  s.method = config.method;
  switch (config.method) {
    case Method::rs_nag_c:
      s.convex = make_convex_state(std::move(x0), obj.lipschitz(), omega_c, ell_c);
      break;
    case Method::rs_nag_sc:
      s.strong = make_strong_state(std::move(x0), obj.lipschitz(), obj.mu(), omega_c, ell_c);
      break;
    case Method::rs_gd_convex:
      s.gd = make_gd_state(std::move(x0), false, obj.lipschitz(), obj.mu(), omega_c, ell_c);
      break;
    default:
      s.gd = make_gd_state(std::move(x0), true, obj.lipschitz(), obj.mu(), omega_c, ell_c);
      break;
  }
  return s;
}

}  // namespace

RunTrace run_single(const RunConfig& config, const Objective& obj, std::uint64_t seed, double f_ref) {
  if (config.record_every < 1) throw std::invalid_argument("runner: record_every must be positive");
  const int d = obj.dim();
  const SketchDistribution dist(config.family, d,
                                config.family == SketchFamily::identity ? d : config.r);
  const long step_cost = oracle_cost_per_iteration(config.family, d, dist.r);
  if (config.oracle_budget < step_cost) {
    throw std::invalid_argument("runner: oracle budget below the cost of one iteration");
  }
  if (method_requires_strong_convexity(config.method) && !(obj.mu() > 0.0)) {
    throw std::invalid_argument("runner: method requires a strongly convex objective");
  }

  const double omega_c = omega(dist);
  const double ell_c = ell(dist, obj.smoothness());

  RunTrace trace;
  trace.seed = seed;
  trace.f_ref = f_ref;

  Stepper stepper = make_stepper(config, obj, initial_point(d, seed), omega_c, ell_c);

  auto record = [&](long k, long calls) {
    trace.points.push_back({k, calls, obj.value(stepper.x()) - f_ref});
  };

  record(0, 0);
  long calls = 0;
  long k = 0;
  try {
    while (calls + step_cost <= config.oracle_budget) {
      Rng sketch_rng = Rng::stream(seed, Rng::Stream::sketch, static_cast<std::uint64_t>(k));
      const SketchMatrix sketch = sample(dist, sketch_rng);
      stepper.step(obj, sketch);
      ++k;
      calls += step_cost;
      const bool at_record_point = (k % config.record_every == 0);
      // The epsilon stop is checked every iteration so that thinning the
      // trace never changes where a run halts.
      double gap = 0.0;
      bool gap_known = false;
      if (at_record_point || config.epsilon) {
        gap = obj.value(stepper.x()) - f_ref;
        gap_known = true;
      }
      if (at_record_point) trace.points.push_back({k, calls, gap});
      if (config.epsilon && gap_known && gap <= *config.epsilon) break;
    }
  } catch (const DivergedError& err) {
    trace.final_x = stepper.x();
    trace.iterations = k;
    trace.oracle_calls = calls;
    throw DivergedRunError(err.what(), std::move(trace));
  }
  if (trace.points.back().iter != k) record(k, calls);
  trace.final_x = stepper.x();
  trace.iterations = k;
  trace.oracle_calls = calls;
  return trace;
}

RunSet run(const RunConfig& config, const Objective& obj) {
  if (config.seeds.empty()) throw std::invalid_argument("runner: at least one seed required");
  RunSet out;
  out.f_ref = reference_gap_base(obj);
  out.traces.reserve(config.seeds.size());
  for (std::uint64_t seed : config.seeds) {
    out.traces.push_back(run_single(config, obj, seed, out.f_ref));
  }
  return out;
}

AggregateCurve aggregate(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("aggregate: no traces");
  const std::size_t n_points = traces.front().points.size();
  for (const RunTrace& t : traces) {
    if (t.points.size() != n_points) throw std::invalid_argument("aggregate: mismatched grids");
    for (std::size_t i = 0; i < n_points; ++i) {
      if (t.points[i].iter != traces.front().points[i].iter ||
          t.points[i].oracle_calls != traces.front().points[i].oracle_calls) {
        throw std::invalid_argument("aggregate: mismatched grids");
      }
    }
  }
  AggregateCurve curve;
  curve.n_seeds = static_cast<int>(traces.size());
  curve.iters.reserve(n_points);
  curve.oracle_calls.reserve(n_points);
  curve.mean_gap.reserve(n_points);
  curve.std_gap.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    curve.iters.push_back(traces.front().points[i].iter);
    curve.oracle_calls.push_back(traces.front().points[i].oracle_calls);
    double mean = 0.0;
    for (const RunTrace& t : traces) mean += t.points[i].gap;
    mean /= static_cast<double>(traces.size());
    double sq = 0.0;
    for (const RunTrace& t : traces) {
      const double dev = t.points[i].gap - mean;
      sq += dev * dev;
    }
    const double std_dev =
        traces.size() > 1 ? std::sqrt(sq / static_cast<double>(traces.size() - 1)) : 0.0;
    curve.mean_gap.push_back(mean);
    curve.std_gap.push_back(std_dev);
  }
  return curve;
}

}  // namespace rsnag
