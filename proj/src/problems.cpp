#include "rsnag/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace rsnag {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// log(1 + exp(-t)) without overflow.
double neg_log_sigmoid(double t) {
  return std::max(-t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

// 1 / (1 + exp(t)) without overflow.
double sigmoid_of_neg(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

}  // namespace

const char* quadratic_kind_name(QuadraticKind kind) {
  switch (kind) {
    case QuadraticKind::convex_diag: return "convex_diag";
    case QuadraticKind::convex_dense: return "convex_dense";
    case QuadraticKind::sc_diag: return "sc_diag";
    default: return "sc_dense";
  }
}

QuadraticKind quadratic_kind_from_name(const std::string& name) {
  if (name == "convex_diag") return QuadraticKind::convex_diag;
  if (name == "convex_dense") return QuadraticKind::convex_dense;
  if (name == "sc_diag") return QuadraticKind::sc_diag;
  if (name == "sc_dense") return QuadraticKind::sc_dense;
  throw std::invalid_argument("unknown quadratic instance: " + name);
}

Objective::Objective(SmoothnessModel model, std::optional<LogisticData> logistic,
                     std::optional<double> opt_value, std::optional<Eigen::VectorXd> opt_point)
    : smoothness_(std::make_shared<SmoothnessModel>(std::move(model))),
      logistic_(std::move(logistic)),
      optimum_value_(opt_value),
      optimum_point_(std::move(opt_point)) {}

Objective Objective::quadratic(SmoothnessModel model) {
  const int d = model.dim();
  return Objective(std::move(model), std::nullopt, 0.0, Eigen::VectorXd::Zero(d));
}

Objective Objective::quadratic_instance(QuadraticKind kind, int d) {
  require(d >= 4, "quadratic instance: d must be at least 4");
  switch (kind) {
    case QuadraticKind::convex_diag: {
      Eigen::VectorXd diag = Eigen::VectorXd::Constant(d, 1.0 / (d - 2.0));
      diag[0] = 1.0;
      diag[d - 1] = 0.0;
      return quadratic(SmoothnessModel::diagonal(std::move(diag), 0.0));
    }
    case QuadraticKind::convex_dense: {
      require(d % 2 == 0, "quadratic instance: convex_dense requires even d");
      Eigen::VectorXd alternating(d);
      for (int i = 0; i < d; ++i) alternating[i] = (i % 2 == 0 ? 1.0 : -1.0);
      alternating /= std::sqrt(static_cast<double>(d));
      Eigen::VectorXd ones = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
      std::vector<SmoothnessModel::RankOneTerm> terms;
      terms.push_back({1.0 - 1.0 / (d - 2.0), std::move(alternating)});
      terms.push_back({-1.0 / (d - 2.0), std::move(ones)});
      return quadratic(SmoothnessModel::diag_plus_low_rank(
          Eigen::VectorXd::Constant(d, 1.0 / (d - 2.0)), std::move(terms), 0.0));
    }
    case QuadraticKind::sc_diag: {
      Eigen::VectorXd diag = Eigen::VectorXd::Constant(d, 1.0 / (d - 1.0));
      diag[0] = 1.0;
      return quadratic(SmoothnessModel::diagonal(std::move(diag), 1.0 / (d - 1.0)));
    }
    default: {
      Eigen::VectorXd ones = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
      std::vector<SmoothnessModel::RankOneTerm> terms;
      terms.push_back({(d - 2.0) / (d - 1.0), std::move(ones)});
      return quadratic(SmoothnessModel::diag_plus_low_rank(
          Eigen::VectorXd::Constant(d, 1.0 / (d - 1.0)), std::move(terms), 1.0 / (d - 1.0)));
    }
  }
}

Objective Objective::logistic_from_data(Eigen::MatrixXd data, Eigen::VectorXd labels, double mu) {
  require(data.rows() >= 1, "logistic: empty data rejected");
  require(labels.size() == data.rows(), "logistic: label count must match data rows");
  require(mu > 0.0, "logistic: mu must be positive");
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    require(labels[i] == 1.0 || labels[i] == -1.0, "logistic: labels must be -1 or +1");
  }
  require(data.allFinite(), "logistic: data must be finite");
  SmoothnessModel model = SmoothnessModel::gram_plus_ridge(data, mu);
  return Objective(std::move(model), LogisticData{std::move(data), std::move(labels)},
                   std::nullopt, std::nullopt);
}

void Objective::check_input(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("objective: vector dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("objective: non-finite input");
}

double Objective::value(const Eigen::VectorXd& x) const {
  check_input(x);
  if (!logistic_) return 0.5 * smoothness_->quad_form(x);
  const auto& lg = *logistic_;
  const Eigen::VectorXd margins = lg.labels.cwiseProduct(lg.data * x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) loss += neg_log_sigmoid(margins[i]);
  loss /= static_cast<double>(margins.size());
  return loss + 0.5 * mu() * x.squaredNorm();
}

Eigen::VectorXd Objective::grad(const Eigen::VectorXd& x) const {
  check_input(x);
  if (!logistic_) return smoothness_->apply(x);
  const auto& lg = *logistic_;
  const Eigen::VectorXd margins = lg.labels.cwiseProduct(lg.data * x);
  Eigen::VectorXd weights(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    weights[i] = lg.labels[i] * sigmoid_of_neg(margins[i]);
  }
  const double n = static_cast<double>(margins.size());
  return -(lg.data.transpose() * weights) / n + mu() * x;
}

Eigen::VectorXd Objective::sketched_grad(const Eigen::VectorXd& x, const SketchMatrix& sketch) const {
  if (sketch.rows() != dim()) throw std::invalid_argument("objective: sketch dimension mismatch");
  return sketch.apply_transpose(grad(x));
}

double Objective::reference_value(double tol) const {
  if (optimum_value_) return *optimum_value_;
  if (!(mu() > 0.0)) {
    throw std::logic_error("objective: reference value undefined without strong convexity");
  }
  // Two-sequence accelerated descent on the full gradient, run to a tight
  // gradient norm.
  const double lip = lipschitz();
  const double momentum = (std::sqrt(lip) - std::sqrt(mu())) / (std::sqrt(lip) + std::sqrt(mu()));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim());
  Eigen::VectorXd y = x;
  constexpr long kMaxIters = 2'000'000;
  for (long k = 0; k < kMaxIters; ++k) {
    const Eigen::VectorXd g = grad(y);
    Eigen::VectorXd x_next = y - g / lip;
    y = x_next + momentum * (x_next - x);
    x = std::move(x_next);
    if (grad(x).norm() <= tol) return value(x);
  }
  throw std::runtime_error("objective: reference solve did not reach the gradient tolerance");
}

}  // namespace rsnag
