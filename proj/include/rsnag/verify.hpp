#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rsnag/optimizers.hpp"
#include "rsnag/problems.hpp"
#include "rsnag/sketches.hpp"

namespace rsnag {

// Monte-Carlo validation of the sketch moment identities
//   E[P P^T] = I_d
//   E[(P P^T)^2] = omega I_d            (with equality for these families)
//   E[P P^T Lambda P P^T] = closed form
// against 5-standard-error entrywise tolerances.
struct MomentReport {
  SketchFamily family = SketchFamily::haar;
  int d = 0;
  int r = 0;
  long n_samples = 0;
  double max_dev_unbiased = 0.0;
  double se_at_max_unbiased = 0.0;
  double max_dev_second = 0.0;
  double se_at_max_second = 0.0;
  double max_dev_interaction = 0.0;
  double se_at_max_interaction = 0.0;
  bool pass = false;
  std::string detail;  // names the violated identity on failure
};

using SketchSampler = std::function<SketchMatrix(Rng&)>;

MomentReport check_moments(const SketchDistribution& dist, const SmoothnessModel& model,
                           long n_samples, std::uint64_t seed);

// Same check against a caller-supplied sampler; lets tests confirm that a
// wrongly scaled sampler is caught.
MomentReport check_moments_with_sampler(const SketchDistribution& dist, const SmoothnessModel& model,
                                        long n_samples, std::uint64_t seed,
                                        const SketchSampler& sampler);

// Exact average of P P^T Lambda P P^T over every r-subset of columns;
// independent of the closed form it is compared against. C(d, r) <= 10000.
Eigen::MatrixXd coordinate_enumeration_moment(int d, int r, const SmoothnessModel& model);

// Conditional one-step contraction of the Lyapunov value from a frozen
// reachable state:
//   convex: E[A' (f(x')-f*) + 1/2 ||z'-x*||^2]  <=  A (f(x)-f*) + 1/2 ||z-x*||^2
//   sc:     E[f(x')-f* + mu/2 ||z'-x*||^2]      <=  (1-theta)(f(x)-f* + mu/2 ||z-x*||^2)
struct LyapunovProbe {
  std::string method;
  long state_index = 0;  // iteration count of the frozen state
  long n_samples = 0;
  double current = 0.0;
  double target = 0.0;
  double mean_next = 0.0;
  double se_next = 0.0;
  bool pass = false;
  std::string detail;
};

LyapunovProbe check_lyapunov_convex(const ConvexState& state, const Objective& obj,
                                    const SketchDistribution& dist, long n_samples,
                                    std::uint64_t seed);
LyapunovProbe check_lyapunov_sc(const StrongState& state, const Objective& obj,
                                const SketchDistribution& dist, long n_samples,
                                std::uint64_t seed);

// Reachable frozen states after the given iteration counts.
std::vector<ConvexState> convex_probe_states(const Objective& obj, const SketchDistribution& dist,
                                             const std::vector<long>& iteration_counts,
                                             std::uint64_t seed);
std::vector<StrongState> strong_probe_states(const Objective& obj, const SketchDistribution& dist,
                                             const std::vector<long>& iteration_counts,
                                             std::uint64_t seed);

// Trajectory agreement between the sketched method with a full-rank
// coordinate sketch (a fresh random permutation each step, so P P^T = I)
// and the classical two-sequence recursion.
struct ReductionReport {
  std::string method;
  long steps = 0;
  double max_deviation = 0.0;
  bool pass = false;
};

ReductionReport check_reduction_convex(const Objective& obj, long steps, std::uint64_t seed);
ReductionReport check_reduction_sc(const Objective& obj, long steps, std::uint64_t seed);

// Classical two-sequence references, coded independently of ConvexState /
// StrongState. Both return the x-trajectory including x0.
std::vector<Eigen::VectorXd> classical_nag_convex(const Objective& obj, const Eigen::VectorXd& x0,
                                                  long steps);
std::vector<Eigen::VectorXd> classical_nag_sc(const Objective& obj, const Eigen::VectorXd& x0,
                                              long steps);

// Inequality suite for the sketch constants and the r = 1 factors.
struct ConstantCheck {
  std::string name;
  bool pass = false;
  double worst_margin = 0.0;  // most negative slack seen (>= 0 when passing)
  std::string detail;
};

std::vector<ConstantCheck> check_constants(SketchFamily family, int d_max, int models_per_d,
                                           std::uint64_t seed);

// Random PSD curvature matrix with unit-scale spectrum (test fixture).
SmoothnessModel random_psd_model(int d, Rng& rng, double mu = 0.0);

}  // namespace rsnag
