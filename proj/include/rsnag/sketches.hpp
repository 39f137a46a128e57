#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rsnag/rng.hpp"
#include "rsnag/smoothness.hpp"

namespace rsnag {

enum class SketchFamily { haar, coordinate, gaussian, identity };

const char* family_name(SketchFamily family);
SketchFamily family_from_name(const std::string& name);

// Law of the sketch matrix P in R^{d x r}, scaled so E[P P^T] = I_d:
//   haar:       sqrt(d/r) times the first r columns of a Haar orthogonal matrix
//   coordinate: sqrt(d/r) times r distinct columns of I_d, sampled uniformly
//   gaussian:   i.i.d. N(0, 1/r) entries
//   identity:   I_d (forces r = d; realizes full-gradient GD/NAG)
struct SketchDistribution {
  SketchFamily family;
  int d;
  int r;

  SketchDistribution(SketchFamily family_, int d_, int r_);
};

class SketchMatrix {
 public:
  int rows() const { return d_; }
  int cols() const { return r_; }
  SketchFamily family() const { return family_; }

  // P^T v
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const;
  // P s
  Eigen::VectorXd apply(const Eigen::VectorXd& s) const;
  // P P^T v
  Eigen::VectorXd project(const Eigen::VectorXd& v) const { return apply(apply_transpose(v)); }

  Eigen::MatrixXd dense() const;

  // Wraps explicit entries (replaying a stored sketch, test samplers).
  static SketchMatrix from_dense(SketchFamily family, Eigen::MatrixXd entries);

 private:
  friend SketchMatrix sample(const SketchDistribution& dist, Rng& rng);
  friend SketchMatrix coordinate_sketch_from_indices(int d, const std::vector<int>& indices);

  struct DenseCols { Eigen::MatrixXd mat; };
  struct Columns { std::vector<int> indices; double scale; };
  struct Identity {};

  SketchMatrix(SketchFamily family, int d, int r, std::variant<DenseCols, Columns, Identity> rep)
      : family_(family), d_(d), r_(r), rep_(std::move(rep)) {}

  SketchFamily family_;
  int d_;
  int r_;
  std::variant<DenseCols, Columns, Identity> rep_;
};

SketchMatrix sample(const SketchDistribution& dist, Rng& rng);

// Coordinate sketch with prescribed column indices (enumeration and
// full-rank permutation tests).
SketchMatrix coordinate_sketch_from_indices(int d, const std::vector<int>& indices);

// Second-moment constant: E[(P P^T)^2] <= omega I.
double omega(const SketchDistribution& dist);

// Smoothness-interaction constant: E[P P^T Lambda P P^T] <= ell L I.
double ell(const SketchDistribution& dist, const SmoothnessModel& model);

// Bundle of the admissible constants for one (distribution, model) pair.
// beta is the Haar mixing weight d(d-r)/((d+2)(d-1)); unset elsewhere.
struct SketchConstants {
  double omega = 0.0;
  double ell = 0.0;
  double oracle_factor = 0.0;  // sqrt(omega * ell) * r
  std::optional<double> beta;
};

SketchConstants sketch_constants(const SketchDistribution& dist, const SmoothnessModel& model);

// sqrt(omega * ell) * r; equals d for the identity sketch and for
// full-dimensional accelerated methods generally.
double oracle_factor(const SketchDistribution& dist, const SmoothnessModel& model);

// r = 1 oracle factors Q_H, Q_C, Q_G. Rejects the identity family.
double q_at_one(SketchFamily family, int d, const SmoothnessModel& model);

// Smallest r in {1..d} minimizing oracle_factor (d for identity).
int optimal_r(SketchFamily family, int d, const SmoothnessModel& model);

// Closed form for E[P P^T Lambda P P^T], materialized; guarded to d <= 200.
Eigen::MatrixXd exact_interaction_moment(const SketchDistribution& dist, const SmoothnessModel& model);

}  // namespace rsnag
