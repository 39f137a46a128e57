#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>

#include "rsnag/sketches.hpp"
#include "rsnag/smoothness.hpp"

namespace rsnag {

enum class QuadraticKind { convex_diag, convex_dense, sc_diag, sc_dense };

const char* quadratic_kind_name(QuadraticKind kind);
QuadraticKind quadratic_kind_from_name(const std::string& name);

// Differentiable objective with value, gradient, and sketched-gradient
// queries. Two kinds:
//   quadratic: f(x) = 1/2 x^T Lambda x, optimum 0 at the origin
//   logistic:  f(x) = 1/n sum log(1 + exp(-y_i a_i^T x)) + mu/2 ||x||^2
// The smoothness model is the curvature certificate used by every stepping
// rule and every sketch constant.
class Objective {
 public:
  static Objective quadratic(SmoothnessModel model);
  static Objective quadratic_instance(QuadraticKind kind, int d);
  static Objective logistic_from_data(Eigen::MatrixXd data, Eigen::VectorXd labels, double mu);

  int dim() const { return smoothness_->dim(); }
  const SmoothnessModel& smoothness() const { return *smoothness_; }
  double mu() const { return smoothness_->strong_convexity(); }
  double lipschitz() const { return smoothness_->spectral_norm(); }
  bool is_quadratic() const { return !logistic_.has_value(); }

  std::optional<double> optimum_value() const { return optimum_value_; }
  const std::optional<Eigen::VectorXd>& optimum_point() const { return optimum_point_; }

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
  // P^T grad f(x); billed as r directional-derivative queries by the runner.
  Eigen::VectorXd sketched_grad(const Eigen::VectorXd& x, const SketchMatrix& sketch) const;

  // f* if known; otherwise a full-gradient accelerated solve down to
  // ||grad f(x)|| <= tol. The result is an upper bound on f* with error of
  // order L tol^2 / (2 mu^2). Requires mu > 0 when the optimum is unknown.
  double reference_value(double tol) const;

 private:
  struct LogisticData {
    Eigen::MatrixXd data;    // n x d, row i is a_i^T
    Eigen::VectorXd labels;  // entries in {-1, +1}
  };

  Objective(SmoothnessModel model, std::optional<LogisticData> logistic,
            std::optional<double> opt_value, std::optional<Eigen::VectorXd> opt_point);

  void check_input(const Eigen::VectorXd& x) const;

  std::shared_ptr<const SmoothnessModel> smoothness_;
  std::optional<LogisticData> logistic_;
  std::optional<double> optimum_value_;
  std::optional<Eigen::VectorXd> optimum_point_;
};

}  // namespace rsnag
