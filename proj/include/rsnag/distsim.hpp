#pragma once

#include <cstdint>
#include <vector>

#include "rsnag/runner.hpp"

namespace rsnag {

// Server/worker simulation of the shared-sketch protocol: each round the
// server broadcasts the seed index defining P_k, every worker uplinks
// s_{i,k} = P_k^T grad f_i(y_k), and the server steps with
// P_k * mean_i s_{i,k} = P_k P_k^T grad f(y_k).
struct WorkerSet {
  // Local quadratic f_i(x) = 1/2 x^T Lambda_i x held as spectral components;
  // the average of the Lambda_i recovers the global curvature matrix.
  struct LocalQuadratic {
    std::vector<SmoothnessModel::RankOneTerm> components;

    Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
    double value(const Eigen::VectorXd& x) const;
  };

  Objective global;
  std::vector<LocalQuadratic> workers;

  int n_workers() const { return static_cast<int>(workers.size()); }
  // (1/n) sum_i grad f_i(x)
  Eigen::VectorXd averaged_grad(const Eigen::VectorXd& x) const;
};

// Random split of the curvature matrix into per-worker spectral components,
// scaled by n so the average recovers it. Diagonal forms are split along the
// coordinate axes; other forms are eigendecomposed.
WorkerSet partition_quadratic(const Objective& obj, int n, std::uint64_t seed);

struct CommLedger {
  long rounds = 0;
  int n_workers = 0;
  int r = 0;
  long uplink_scalars_per_worker_per_round = 0;  // = r
  long total_uplink_scalars = 0;                 // rounds * n * r
  long seed_broadcasts = 0;                      // one per round
  int bits_per_scalar = 64;

  long total_uplink_bits() const { return total_uplink_scalars * bits_per_scalar; }
};

struct DistRunResult {
  RunTrace trace;
  CommLedger ledger;
};

// Mirrors run_single on the same seed: identical x0, identical per-round
// sketches, identical recording grid; the iterates agree with the
// single-machine run up to floating-point summation order.
DistRunResult dist_run(const WorkerSet& workers, const RunConfig& config, std::uint64_t seed,
                       double f_ref, int bits_per_scalar = 64);

}  // namespace rsnag
