#include "rsnag/optimizers.hpp"

#include <cmath>
#include <stdexcept>

namespace rsnag {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_finite(const Eigen::VectorXd& v, const char* which, long iteration) {
  if (!v.allFinite()) {
    throw DivergedError(std::string("optimizer: non-finite ") + which + " at iteration " +
                            std::to_string(iteration),
                        iteration);
  }
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::rs_nag_c: return "rs_nag_c";
    case Method::rs_nag_sc: return "rs_nag_sc";
    case Method::rs_gd_convex: return "rs_gd_convex";
    default: return "rs_gd_sc";
  }
}

Method method_from_name(const std::string& name) {
  if (name == "rs_nag_c") return Method::rs_nag_c;
  if (name == "rs_nag_sc") return Method::rs_nag_sc;
  if (name == "rs_gd_convex") return Method::rs_gd_convex;
  if (name == "rs_gd_sc") return Method::rs_gd_sc;
  throw std::invalid_argument("unknown method: " + name);
}

bool method_requires_strong_convexity(Method method) {
  return method == Method::rs_nag_sc || method == Method::rs_gd_sc;
}

ConvexState make_convex_state(Eigen::VectorXd x0, double lip, double omega, double ell) {
  require(lip > 0.0 && omega > 0.0 && ell > 0.0, "optimizer: constants must be positive");
  ConvexState state;
  state.z = x0;
  state.x = std::move(x0);
  state.m = 1.0 / (2.0 * lip * ell);
  state.omega = omega;
  state.ell = ell;
  state.lip = lip;
  return state;
}

StrongState make_strong_state(Eigen::VectorXd x0, double lip, double mu, double omega, double ell) {
  require(lip > 0.0 && omega > 0.0 && ell > 0.0, "optimizer: constants must be positive");
  require(mu > 0.0, "optimizer: strongly convex stepping needs mu > 0");
  require(mu <= lip * (1.0 + 1e-9), "optimizer: mu must not exceed L");
  require(omega * ell >= 1.0 - 1e-9, "optimizer: omega * ell must be at least 1");
  StrongState state;
  state.z = x0;
  state.x = std::move(x0);
  // theta lies in (0, 1]; rounding in L can push the ratio past 1
  state.theta = std::min(std::sqrt(mu / (lip * omega * ell)), 1.0);
  state.lip = lip;
  state.mu = mu;
  state.ell = ell;
  return state;
}

GdState make_gd_state(Eigen::VectorXd x0, bool strongly_convex_mode, double lip, double mu,
                      double omega, double ell) {
  require(lip > 0.0 && omega > 0.0 && ell > 0.0, "optimizer: constants must be positive");
  GdState state;
  state.x = std::move(x0);
  if (strongly_convex_mode) {
    require(mu > 0.0, "optimizer: strongly convex stepping needs mu > 0");
    state.eta = 1.0 / (ell * lip);
  } else {
    state.eta = 1.0 / (2.0 * omega * lip);
  }
  return state;
}

double a_next(double accum, double m, double omega) {
  require(m > 0.0 && omega > 0.0, "optimizer: m and omega must be positive");
  require(accum >= 0.0, "optimizer: accumulator must be nonnegative");
  return (m + std::sqrt(m * m + 2.0 * omega * m * accum)) / omega;
}

ConvexStepPlan plan_convex_step(const ConvexState& state) {
  ConvexStepPlan plan;
  plan.a = a_next(state.accum, state.m, state.omega);
  plan.accum_next = state.accum + plan.a;
  plan.y = (state.accum / plan.accum_next) * state.x + (plan.a / plan.accum_next) * state.z;
  return plan;
}

void apply_convex_step(ConvexState& state, const ConvexStepPlan& plan,
                       const Eigen::VectorXd& projected_grad) {
  state.x = plan.y - projected_grad / (state.lip * state.ell);
  state.z -= plan.a * projected_grad;
  state.accum = plan.accum_next;
  state.k += 1;
  check_finite(state.x, "iterate", state.k);
}

void rs_nag_c_step(ConvexState& state, const Objective& obj, const SketchMatrix& sketch) {
  if (state.x.size() != obj.dim()) throw std::invalid_argument("optimizer: state dimension mismatch");
  ConvexStepPlan plan = plan_convex_step(state);
  apply_convex_step(state, plan, sketch.project(obj.grad(plan.y)));
}

Eigen::VectorXd plan_strong_step(const StrongState& state) {
  return (state.x + state.theta * state.z) / (1.0 + state.theta);
}

void apply_strong_step(StrongState& state, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& projected_grad) {
  state.x = y - projected_grad / (state.lip * state.ell);
  state.z = (1.0 - state.theta) * state.z + state.theta * y -
            (state.theta / state.mu) * projected_grad;
  state.k += 1;
  check_finite(state.x, "iterate", state.k);
}

void rs_nag_sc_step(StrongState& state, const Objective& obj, const SketchMatrix& sketch) {
  if (state.x.size() != obj.dim()) throw std::invalid_argument("optimizer: state dimension mismatch");
  if (!(obj.mu() > 0.0)) throw std::invalid_argument("optimizer: objective is not strongly convex");
  const Eigen::VectorXd y = plan_strong_step(state);
  apply_strong_step(state, y, sketch.project(obj.grad(y)));
}

void apply_gd_step(GdState& state, const Eigen::VectorXd& projected_grad) {
  state.x -= state.eta * projected_grad;
  state.k += 1;
  check_finite(state.x, "iterate", state.k);
}

void rs_gd_step(GdState& state, const Objective& obj, const SketchMatrix& sketch) {
  if (state.x.size() != obj.dim()) throw std::invalid_argument("optimizer: state dimension mismatch");
  apply_gd_step(state, sketch.project(obj.grad(state.x)));
}

double theoretical_bound(Method method, const Objective& obj, double omega, double ell,
                         long n_iters, double initial) {
  require(n_iters >= 1, "bound: iteration count must be positive");
  require(omega > 0.0 && ell > 0.0, "bound: constants must be positive");
  const double lip = obj.lipschitz();
  const double n = static_cast<double>(n_iters);
  switch (method) {
    case Method::rs_nag_c:
      return 2.0 * lip * omega * ell * initial * initial / (n * n);
    case Method::rs_nag_sc: {
      require(obj.mu() > 0.0, "bound: strongly convex bound needs mu > 0");
      const double theta = std::min(std::sqrt(obj.mu() / (lip * omega * ell)), 1.0);
      return 2.0 * std::pow(1.0 - theta, n) * initial;
    }
    case Method::rs_gd_convex:
      return 2.0 * omega * lip * initial * initial / n;
    default: {
      require(obj.mu() > 0.0, "bound: strongly convex bound needs mu > 0");
      const double ratio = std::min(obj.mu() / (ell * lip), 1.0);
      return std::pow(1.0 - ratio, n) * initial;
    }
  }
}

}  // namespace rsnag
