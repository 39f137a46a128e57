#pragma once

#include <Eigen/Core>
#include <functional>
#include <variant>
#include <vector>

namespace rsnag {

// Curvature upper-bound matrix for f(y) <= f(x) + <grad f(x), y-x>
//                                        + 1/2 (y-x)^T Lambda (y-x),
// kept in structured form so the trace and diagonal are exact and the
// matrix-vector action never materializes Lambda.
//
// Derived scalars:
//   L          = ||Lambda||       (top eigenvalue, power iteration)
//   mu         = strong-convexity constant of the objective (0 if merely convex)
//   r_eff      = tr(Lambda) / L
//   delta_diag = max_i Lambda_ii / L
class SmoothnessModel {
 public:
  struct Dense {
    Eigen::MatrixXd mat;  // symmetric d x d
  };
  struct Diagonal {
    Eigen::VectorXd diag;
  };
  struct RankOneTerm {
    double coeff;
    Eigen::VectorXd unit;  // ||unit|| = 1
  };
  struct DiagPlusLowRank {
    Eigen::VectorXd diag;
    std::vector<RankOneTerm> terms;
  };
  struct GramPlusRidge {
    Eigen::MatrixXd data;  // n x d
    double scale;          // 1/(4n)
    double ridge;          // mu
  };

  static SmoothnessModel dense(Eigen::MatrixXd mat, double mu = 0.0);
  static SmoothnessModel diagonal(Eigen::VectorXd diag, double mu = 0.0);
  static SmoothnessModel diag_plus_low_rank(Eigen::VectorXd diag,
                                            std::vector<RankOneTerm> terms,
                                            double mu = 0.0);
  static SmoothnessModel gram_plus_ridge(Eigen::MatrixXd data, double mu);

  int dim() const { return d_; }
  double spectral_norm() const { return spectral_norm_; }
  double strong_convexity() const { return mu_; }
  double trace() const { return trace_; }
  double max_diag() const { return max_diag_; }
  double effective_rank() const;  // in [1, d]
  double diag_ratio() const;      // in [1/d, 1]

  // Lambda v
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  // v^T Lambda v
  double quad_form(const Eigen::VectorXd& v) const;

  // Dense d x d copy; refused above the materialization cap (d <= 2000).
  Eigen::MatrixXd materialize() const;

  const char* form_name() const;
  bool is_gram_plus_ridge() const { return std::holds_alternative<GramPlusRidge>(form_); }

 private:
  using Form = std::variant<Dense, Diagonal, DiagPlusLowRank, GramPlusRidge>;

  SmoothnessModel(Form form, int d, double mu);
  void finalize();  // exact trace/diagonal, then power iteration for L

  Form form_;
  int d_;
  double mu_;
  double spectral_norm_ = 0.0;
  double trace_ = 0.0;
  double max_diag_ = 0.0;
};

// Top eigenvalue of a symmetric PSD operator given by its matrix-vector
// action. Deterministic start vector; converges when the eigenvalue change
// is below 1e-12 relative and the residual ||Av - lambda v|| <= 1e-10 lambda.
double power_iteration_top_eigenvalue(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                                      int d, int max_iters = 10000);

}  // namespace rsnag
