#pragma once

#include <Eigen/Core>
#include <string>

#include "rsnag/problems.hpp"
#include "rsnag/sketches.hpp"

namespace rsnag {

enum class Method { rs_nag_c, rs_nag_sc, rs_gd_convex, rs_gd_sc };

const char* method_name(Method method);
Method method_from_name(const std::string& name);
bool method_requires_strong_convexity(Method method);

// Accelerated three-sequence state for convex objectives.
//
//   m       = 1/(2 L ell)
//   a_{k+1} = (m + sqrt(m^2 + 2 omega m A_k)) / omega
//   A_{k+1} = A_k + a_{k+1}
//   y_k     = (A_k x_k + a_{k+1} z_k) / A_{k+1}
//   x_{k+1} = y_k - (1/(L ell)) P P^T grad f(y_k)
//   z_{k+1} = z_k - a_{k+1}  P P^T grad f(y_k)
struct ConvexState {
  Eigen::VectorXd x, z;
  double accum = 0.0;  // A_k, starts at 0
  double m = 0.0;
  double omega = 0.0, ell = 0.0, lip = 0.0;
  long k = 0;
};

// Accelerated three-sequence state for strongly convex objectives.
//
//   theta   = sqrt(mu / (L omega ell)), in (0, 1]
//   y_k     = (x_k + theta z_k) / (1 + theta)
//   x_{k+1} = y_k - (1/(L ell)) P P^T grad f(y_k)
//   z_{k+1} = (1-theta) z_k + theta y_k - (theta/mu) P P^T grad f(y_k)
struct StrongState {
  Eigen::VectorXd x, z;
  double theta = 0.0;
  double lip = 0.0, mu = 0.0, ell = 0.0;
  long k = 0;
};

// Plain sketched descent x_{k+1} = x_k - eta P P^T grad f(x_k) with
// eta = 1/(2 omega L) in convex mode and eta = 1/(ell L) in strongly
// convex mode.
struct GdState {
  Eigen::VectorXd x;
  double eta = 0.0;
  long k = 0;
};

ConvexState make_convex_state(Eigen::VectorXd x0, double lip, double omega, double ell);
StrongState make_strong_state(Eigen::VectorXd x0, double lip, double mu, double omega, double ell);
GdState make_gd_state(Eigen::VectorXd x0, bool strongly_convex_mode, double lip, double mu,
                      double omega, double ell);

// Positive root of (omega/2) a^2 - m a - m A = 0.
double a_next(double accum, double m, double omega);

// Extrapolation point and scalar schedule for the upcoming step; the
// gradient is evaluated once at `y` and shared by the x- and z-updates.
struct ConvexStepPlan {
  double a = 0.0;
  double accum_next = 0.0;
  Eigen::VectorXd y;
};

ConvexStepPlan plan_convex_step(const ConvexState& state);
void apply_convex_step(ConvexState& state, const ConvexStepPlan& plan,
                       const Eigen::VectorXd& projected_grad);
void rs_nag_c_step(ConvexState& state, const Objective& obj, const SketchMatrix& sketch);

Eigen::VectorXd plan_strong_step(const StrongState& state);  // y_k
void apply_strong_step(StrongState& state, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& projected_grad);
void rs_nag_sc_step(StrongState& state, const Objective& obj, const SketchMatrix& sketch);

void apply_gd_step(GdState& state, const Eigen::VectorXd& projected_grad);
void rs_gd_step(GdState& state, const Objective& obj, const SketchMatrix& sketch);

// Worst-case expected-gap envelopes:
//   rs_nag_c:     2 L omega ell R0^2 / N^2
//   rs_nag_sc:    2 (1-theta)^N Delta0
//   rs_gd_convex: 2 omega L R0^2 / N
//   rs_gd_sc:     (1 - mu/(ell L))^N Delta0
// `initial` is R0 = ||x0 - x*|| for the convex methods and
// Delta0 = f(x0) - f* for the strongly convex ones.
double theoretical_bound(Method method, const Objective& obj, double omega, double ell,
                         long n_iters, double initial);

struct DivergedError : std::runtime_error {
  DivergedError(const std::string& what, long iteration)
      : std::runtime_error(what), iteration(iteration) {}
  long iteration;
};

}  // namespace rsnag
