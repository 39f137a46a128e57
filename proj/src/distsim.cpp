#include "rsnag/distsim.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "rsnag/rng.hpp"

namespace rsnag {

Eigen::VectorXd WorkerSet::LocalQuadratic::grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (const auto& term : components) out += (term.coeff * term.unit.dot(x)) * term.unit;
  return out;
}

double WorkerSet::LocalQuadratic::value(const Eigen::VectorXd& x) const {
  double out = 0.0;
  for (const auto& term : components) {
    const double proj = term.unit.dot(x);
    out += 0.5 * term.coeff * proj * proj;
  }
  return out;
}

Eigen::VectorXd WorkerSet::averaged_grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (const auto& worker : workers) out += worker.grad(x);
  return out / static_cast<double>(workers.size());
}

WorkerSet partition_quadratic(const Objective& obj, int n, std::uint64_t seed) {
  if (!obj.is_quadratic()) throw std::invalid_argument("distsim: only quadratic objectives are split");
  if (n < 1) throw std::invalid_argument("distsim: need at least one worker");
  const int d = obj.dim();

  // Spectral components (eigenvalue, unit vector) of the curvature matrix.
  std::vector<SmoothnessModel::RankOneTerm> components;
  const SmoothnessModel& model = obj.smoothness();
  if (std::string(model.form_name()) == std::string("diagonal")) {
    const Eigen::MatrixXd lambda_diag = model.materialize();
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd basis = Eigen::VectorXd::Zero(d);
      basis[i] = 1.0;
      components.push_back({lambda_diag(i, i), std::move(basis)});
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.materialize());
    for (int i = 0; i < d; ++i) components.push_back({eig.eigenvalues()[i], eig.eigenvectors().col(i)});
  }

  WorkerSet set{obj, std::vector<WorkerSet::LocalQuadratic>(n)};
  Rng rng = Rng::stream(seed, Rng::Stream::partition, 0);
  for (auto& component : components) {
    const int owner = rng.below(n);
    component.coeff *= static_cast<double>(n);
    set.workers[owner].components.push_back(std::move(component));
  }
  return set;
}

DistRunResult dist_run(const WorkerSet& workers, const RunConfig& config, std::uint64_t seed,
                       double f_ref, int bits_per_scalar) {
  if (bits_per_scalar != 32 && bits_per_scalar != 64) {
    throw std::invalid_argument("distsim: scalar width must be 32 or 64 bits");
  }
  if (config.record_every < 1) throw std::invalid_argument("distsim: record_every must be positive");
  const Objective& obj = workers.global;
  const int d = obj.dim();
  const SketchDistribution dist(config.family, d,
                                config.family == SketchFamily::identity ? d : config.r);
  const long step_cost = oracle_cost_per_iteration(config.family, d, dist.r);
  if (config.oracle_budget < step_cost) {
    throw std::invalid_argument("distsim: oracle budget below the cost of one round");
  }
  if (method_requires_strong_convexity(config.method) && !(obj.mu() > 0.0)) {
    throw std::invalid_argument("distsim: method requires a strongly convex objective");
  }

  const double omega_c = omega(dist);
  const double ell_c = ell(dist, obj.smoothness());
  const Eigen::VectorXd x0 = initial_point(d, seed);

  ConvexState convex;
  StrongState strong;
  GdState gd;
  switch (config.method) {
    case Method::rs_nag_c:
      convex = make_convex_state(x0, obj.lipschitz(), omega_c, ell_c);
      break;
    case Method::rs_nag_sc:
      strong = make_strong_state(x0, obj.lipschitz(), obj.mu(), omega_c, ell_c);
      break;
    case Method::rs_gd_convex:
      gd = make_gd_state(x0, false, obj.lipschitz(), obj.mu(), omega_c, ell_c);
      break;
    default:
      gd = make_gd_state(x0, true, obj.lipschitz(), obj.mu(), omega_c, ell_c);
      break;
  }
  auto current_x = [&]() -> const Eigen::VectorXd& {
    switch (config.method) {
      case Method::rs_nag_c: return convex.x;
      case Method::rs_nag_sc: return strong.x;
      default: return gd.x;
    }
  };

  // One protocol round at the extrapolation point y: every worker uplinks
  // its r-vector sketch, the server averages in fixed worker order and
  // reconstructs the projected gradient.
  auto round_gradient = [&](const Eigen::VectorXd& y, const SketchMatrix& sketch) {
    Eigen::VectorXd mean_sketch = Eigen::VectorXd::Zero(sketch.cols());
    for (const auto& worker : workers.workers) {
      mean_sketch += sketch.apply_transpose(worker.grad(y));
    }
    mean_sketch /= static_cast<double>(workers.n_workers());
    return sketch.apply(mean_sketch);
  };

  RunTrace trace;
  trace.seed = seed;
  trace.f_ref = f_ref;
  trace.points.push_back({0, 0, obj.value(current_x()) - f_ref});

  CommLedger ledger;
  ledger.n_workers = workers.n_workers();
  ledger.r = dist.r;
  ledger.uplink_scalars_per_worker_per_round = dist.r;
  ledger.bits_per_scalar = bits_per_scalar;

  long calls = 0;
  long k = 0;
  while (calls + step_cost <= config.oracle_budget) {
    Rng sketch_rng = Rng::stream(seed, Rng::Stream::sketch, static_cast<std::uint64_t>(k));
    const SketchMatrix sketch = sample(dist, sketch_rng);
    switch (config.method) {
      case Method::rs_nag_c: {
        const ConvexStepPlan plan = plan_convex_step(convex);
        apply_convex_step(convex, plan, round_gradient(plan.y, sketch));
        break;
      }
      case Method::rs_nag_sc: {
        const Eigen::VectorXd y = plan_strong_step(strong);
        apply_strong_step(strong, y, round_gradient(y, sketch));
        break;
      }
      default:
        apply_gd_step(gd, round_gradient(gd.x, sketch));
        break;
    }
    ++k;
    calls += step_cost;
    ledger.rounds += 1;
    ledger.seed_broadcasts += 1;
    ledger.total_uplink_scalars += static_cast<long>(workers.n_workers()) * dist.r;
    double gap = 0.0;
    bool gap_known = false;
    if (k % config.record_every == 0 || config.epsilon) {
      gap = obj.value(current_x()) - f_ref;
      gap_known = true;
    }
    if (k % config.record_every == 0) trace.points.push_back({k, calls, gap});
    if (config.epsilon && gap_known && gap <= *config.epsilon) break;
  }
  if (trace.points.back().iter != k) {
    trace.points.push_back({k, calls, obj.value(current_x()) - f_ref});
  }
  trace.final_x = current_x();
  trace.iterations = k;
  trace.oracle_calls = calls;
  return {std::move(trace), ledger};
}

}  // namespace rsnag
