#include "rsnag/smoothness.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "rsnag/rng.hpp"

namespace rsnag {

namespace {

constexpr int kMaterializeCap = 2000;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

SmoothnessModel::SmoothnessModel(Form form, int d, double mu)
    : form_(std::move(form)), d_(d), mu_(mu) {
  require(d_ >= 2, "smoothness: dimension must be at least 2");
  require(mu_ >= 0.0, "smoothness: mu must be nonnegative");
  finalize();
}

SmoothnessModel SmoothnessModel::dense(Eigen::MatrixXd mat, double mu) {
  require(mat.rows() == mat.cols(), "smoothness: dense form must be square");
  require(mat.isApprox(mat.transpose(), 1e-12), "smoothness: dense form must be symmetric");
  const int d = static_cast<int>(mat.rows());
  return SmoothnessModel(Dense{std::move(mat)}, d, mu);
}

SmoothnessModel SmoothnessModel::diagonal(Eigen::VectorXd diag, double mu) {
  const int d = static_cast<int>(diag.size());
  require((diag.array() >= 0.0).all(), "smoothness: diagonal entries must be nonnegative");
  return SmoothnessModel(Diagonal{std::move(diag)}, d, mu);
}

SmoothnessModel SmoothnessModel::diag_plus_low_rank(Eigen::VectorXd diag,
                                                    std::vector<RankOneTerm> terms,
                                                    double mu) {
  const int d = static_cast<int>(diag.size());
  for (const auto& term : terms) {
    require(term.unit.size() == d, "smoothness: rank-one vector has wrong dimension");
    require(std::abs(term.unit.norm() - 1.0) <= 1e-12, "smoothness: rank-one vector must be unit");
  }
  return SmoothnessModel(DiagPlusLowRank{std::move(diag), std::move(terms)}, d, mu);
}

SmoothnessModel SmoothnessModel::gram_plus_ridge(Eigen::MatrixXd data, double mu) {
  require(data.rows() >= 1, "smoothness: gram form needs at least one data row");
  require(mu >= 0.0, "smoothness: gram ridge must be nonnegative");
  const int d = static_cast<int>(data.cols());
  const double scale = 1.0 / (4.0 * static_cast<double>(data.rows()));
  return SmoothnessModel(GramPlusRidge{std::move(data), scale, mu}, d, mu);
}

void SmoothnessModel::finalize() {
  // Exact trace and max diagonal entry from the structured form.
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Dense>) {
          trace_ = f.mat.trace();
          max_diag_ = f.mat.diagonal().maxCoeff();
        } else if constexpr (std::is_same_v<T, Diagonal>) {
          trace_ = f.diag.sum();
          max_diag_ = f.diag.maxCoeff();
        } else if constexpr (std::is_same_v<T, DiagPlusLowRank>) {
          Eigen::VectorXd diag = f.diag;
          for (const auto& term : f.terms) diag += term.coeff * term.unit.cwiseAbs2();
          trace_ = diag.sum();
          max_diag_ = diag.maxCoeff();
        } else if constexpr (std::is_same_v<T, GramPlusRidge>) {
          Eigen::VectorXd col_sq = f.data.colwise().squaredNorm();
          trace_ = f.scale * col_sq.sum() + f.ridge * d_;
          max_diag_ = f.scale * col_sq.maxCoeff() + f.ridge;
        }
      },
      form_);

  if (const auto* diag_form = std::get_if<Diagonal>(&form_)) {
    // exact for an axis-aligned spectrum
    spectral_norm_ = diag_form->diag.maxCoeff();
  } else {
    try {
      spectral_norm_ = power_iteration_top_eigenvalue(
          [this](const Eigen::VectorXd& v) { return apply(v); }, d_);
    } catch (const std::runtime_error& err) {
      throw std::runtime_error(std::string(err.what()) + " (form " + form_name() + ")");
    }
  }
  if (!(spectral_norm_ > 0.0)) {
    throw std::invalid_argument(std::string("smoothness: zero operator in form ") + form_name());
  }
  require(mu_ <= spectral_norm_ * (1.0 + 1e-9), "smoothness: mu exceeds the spectral norm");
}

double SmoothnessModel::effective_rank() const {
  if (spectral_norm_ <= 0.0) throw std::logic_error("smoothness: spectral norm not available");
  return trace_ / spectral_norm_;
}

double SmoothnessModel::diag_ratio() const {
  if (spectral_norm_ <= 0.0) throw std::logic_error("smoothness: spectral norm not available");
  return max_diag_ / spectral_norm_;
}

Eigen::VectorXd SmoothnessModel::apply(const Eigen::VectorXd& v) const {
  if (v.size() != d_) throw std::invalid_argument("smoothness: vector dimension mismatch");
  return std::visit(
      [&](const auto& f) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Dense>) {
          return f.mat * v;
        } else if constexpr (std::is_same_v<T, Diagonal>) {
          return f.diag.cwiseProduct(v);
        } else if constexpr (std::is_same_v<T, DiagPlusLowRank>) {
          Eigen::VectorXd out = f.diag.cwiseProduct(v);
          for (const auto& term : f.terms) out += (term.coeff * term.unit.dot(v)) * term.unit;
          return out;
        } else {
          const GramPlusRidge& g = f;
          return g.scale * (g.data.transpose() * (g.data * v)) + g.ridge * v;
        }
      },
      form_);
}

double SmoothnessModel::quad_form(const Eigen::VectorXd& v) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GramPlusRidge>) {
          if (v.size() != d_) throw std::invalid_argument("smoothness: vector dimension mismatch");
          return f.scale * (f.data * v).squaredNorm() + f.ridge * v.squaredNorm();
        } else {
          return v.dot(apply(v));
        }
      },
      form_);
}

Eigen::MatrixXd SmoothnessModel::materialize() const {
  if (d_ > kMaterializeCap) {
    throw std::logic_error("smoothness: refusing to materialize above the dimension cap");
  }
  return std::visit(
      [&](const auto& f) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Dense>) {
          return f.mat;
        } else if constexpr (std::is_same_v<T, Diagonal>) {
          return f.diag.asDiagonal();
        } else if constexpr (std::is_same_v<T, DiagPlusLowRank>) {
          Eigen::MatrixXd out = f.diag.asDiagonal();
          for (const auto& term : f.terms) out += term.coeff * term.unit * term.unit.transpose();
          return out;
        } else {
          const GramPlusRidge& g = f;
          Eigen::MatrixXd out = g.scale * (g.data.transpose() * g.data);
          out.diagonal().array() += g.ridge;
          return out;
        }
      },
      form_);
}

const char* SmoothnessModel::form_name() const {
  switch (form_.index()) {
    case 0: return "dense";
    case 1: return "diagonal";
    case 2: return "diag_plus_low_rank";
    default: return "gram_plus_ridge";
  }
}

double power_iteration_top_eigenvalue(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                                      int d, int max_iters) {
  // Block variant: a small orthonormal block keeps the top Ritz value
  // converging when the leading eigenvalues are nearly tied.
  const int block = std::min(d, 4);
  Rng rng(0x5eedULL);  // fixed start so L is reproducible
  Eigen::MatrixXd basis(d, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < d; ++i) basis(i, j) = rng.normal();
  basis = Eigen::HouseholderQR<Eigen::MatrixXd>(basis).householderQ() *
          Eigen::MatrixXd::Identity(d, block);

  double lambda = 0.0;
  bool restarted = false;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd image(d, block);
    for (int j = 0; j < block; ++j) image.col(j) = apply(basis.col(j));
    // Rayleigh-Ritz on the current block.
    const Eigen::MatrixXd projected = basis.transpose() * image;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(
        0.5 * (projected + projected.transpose()));
    const double next = ritz.eigenvalues().maxCoeff();
    Eigen::Index top = 0;
    ritz.eigenvalues().maxCoeff(&top);
    const Eigen::VectorXd ritz_vector = basis * ritz.eigenvectors().col(top);
    const double residual = (apply(ritz_vector) - next * ritz_vector).norm();
    const bool value_settled = std::abs(next - lambda) <= 1e-12 * std::max(std::abs(next), 1e-300);
    lambda = next;
    if (value_settled && next > 0.0 && residual <= 1e-10 * next) return lambda;

    if (image.norm() == 0.0) {
      if (restarted) throw std::invalid_argument("power iteration: the operator is zero");
      // the block fell into the kernel; restart from fresh directions
      restarted = true;
      for (int j = 0; j < block; ++j)
        for (int i = 0; i < d; ++i) image(i, j) = rng.normal();
      lambda = 0.0;
    }
    basis = Eigen::HouseholderQR<Eigen::MatrixXd>(image).householderQ() *
            Eigen::MatrixXd::Identity(d, block);
  }
  throw std::runtime_error("power iteration did not converge within the iteration cap");
}

}  // namespace rsnag
