#include "rsnag/sketches.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rsnag {

const char* family_name(SketchFamily family) {
  switch (family) {
    case SketchFamily::haar: return "haar";
    case SketchFamily::coordinate: return "coordinate";
    case SketchFamily::gaussian: return "gaussian";
    default: return "identity";
  }
}

SketchFamily family_from_name(const std::string& name) {
  if (name == "haar") return SketchFamily::haar;
  if (name == "coordinate") return SketchFamily::coordinate;
  if (name == "gaussian") return SketchFamily::gaussian;
  if (name == "identity") return SketchFamily::identity;
  throw std::invalid_argument("unknown sketch family: " + name);
}

SketchDistribution::SketchDistribution(SketchFamily family_, int d_, int r_)
    : family(family_), d(d_), r(r_) {
  if (d < 2) throw std::invalid_argument("sketch: ambient dimension must be at least 2");
  if (family == SketchFamily::identity) {
    if (r != d) throw std::invalid_argument("sketch: identity family forces r = d");
  } else if (r < 1 || r > d) {
    throw std::invalid_argument("sketch: r must satisfy 1 <= r <= d");
  }
}

Eigen::VectorXd SketchMatrix::apply_transpose(const Eigen::VectorXd& v) const {
  if (v.size() != d_) throw std::invalid_argument("sketch: vector dimension mismatch");
  return std::visit(
      [&](const auto& rep) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, DenseCols>) {
          return rep.mat.transpose() * v;
        } else if constexpr (std::is_same_v<T, Columns>) {
          Eigen::VectorXd out(r_);
          for (int j = 0; j < r_; ++j) out[j] = rep.scale * v[rep.indices[j]];
          return out;
        } else {
          return v;
        }
      },
      rep_);
}

Eigen::VectorXd SketchMatrix::apply(const Eigen::VectorXd& s) const {
  if (s.size() != r_) throw std::invalid_argument("sketch: coefficient dimension mismatch");
  return std::visit(
      [&](const auto& rep) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, DenseCols>) {
          return rep.mat * s;
        } else if constexpr (std::is_same_v<T, Columns>) {
          Eigen::VectorXd out = Eigen::VectorXd::Zero(d_);
          for (int j = 0; j < r_; ++j) out[rep.indices[j]] += rep.scale * s[j];
          return out;
        } else {
          return s;
        }
      },
      rep_);
}

Eigen::MatrixXd SketchMatrix::dense() const {
  return std::visit(
      [&](const auto& rep) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, DenseCols>) {
          return rep.mat;
        } else if constexpr (std::is_same_v<T, Columns>) {
          Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d_, r_);
          for (int j = 0; j < r_; ++j) out(rep.indices[j], j) = rep.scale;
          return out;
        } else {
          return Eigen::MatrixXd::Identity(d_, d_);
        }
      },
      rep_);
}

SketchMatrix sample(const SketchDistribution& dist, Rng& rng) {
  const int d = dist.d;
  const int r = dist.r;
  switch (dist.family) {
    case SketchFamily::haar: {
      Eigen::MatrixXd gauss(d, r);
      for (int j = 0; j < r; ++j)
        for (int i = 0; i < d; ++i) gauss(i, j) = rng.normal();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
      // Sign correction against the R diagonal makes the law exactly Haar.
      const auto& qr_mat = qr.matrixQR();
      for (int j = 0; j < r; ++j) {
        if (qr_mat(j, j) < 0.0) q.col(j) = -q.col(j);
      }
      return SketchMatrix(dist.family, d, r,
                          SketchMatrix::DenseCols{std::sqrt(static_cast<double>(d) / r) * q});
    }
    case SketchFamily::coordinate: {
      // Partial Fisher-Yates over 0..d-1, keeping the first r entries.
      std::vector<int> pool(d);
      std::iota(pool.begin(), pool.end(), 0);
      std::vector<int> indices(r);
      for (int j = 0; j < r; ++j) {
        const int pick = j + rng.below(d - j);
        std::swap(pool[j], pool[pick]);
        indices[j] = pool[j];
      }
      return SketchMatrix(dist.family, d, r,
                          SketchMatrix::Columns{std::move(indices),
                                                std::sqrt(static_cast<double>(d) / r)});
    }
    case SketchFamily::gaussian: {
      Eigen::MatrixXd mat(d, r);
      const double scale = 1.0 / std::sqrt(static_cast<double>(r));
      for (int j = 0; j < r; ++j)
        for (int i = 0; i < d; ++i) mat(i, j) = scale * rng.normal();
      return SketchMatrix(dist.family, d, r, SketchMatrix::DenseCols{std::move(mat)});
    }
    default:
      return SketchMatrix(dist.family, d, d, SketchMatrix::Identity{});
  }
}

SketchMatrix SketchMatrix::from_dense(SketchFamily family, Eigen::MatrixXd entries) {
  const int d = static_cast<int>(entries.rows());
  const int r = static_cast<int>(entries.cols());
  if (d < 2 || r < 1 || r > d) throw std::invalid_argument("sketch: bad entry matrix shape");
  return SketchMatrix(family, d, r, DenseCols{std::move(entries)});
}

SketchMatrix coordinate_sketch_from_indices(int d, const std::vector<int>& indices) {
  const int r = static_cast<int>(indices.size());
  if (r < 1 || r > d) throw std::invalid_argument("sketch: index list size out of range");
  for (int idx : indices) {
    if (idx < 0 || idx >= d) throw std::invalid_argument("sketch: column index out of range");
  }
  return SketchMatrix(SketchFamily::coordinate, d, r,
                      SketchMatrix::Columns{indices, std::sqrt(static_cast<double>(d) / r)});
}

double omega(const SketchDistribution& dist) {
  const double d = dist.d;
  const double r = dist.r;
  switch (dist.family) {
    case SketchFamily::haar:
    case SketchFamily::coordinate:
      return d / r;
    case SketchFamily::gaussian:
      return (d + r + 1.0) / r;
    default:
      return 1.0;
  }
}

namespace {

double haar_beta(double d, double r) { return d * (d - r) / ((d + 2.0) * (d - 1.0)); }

}  // namespace

double ell(const SketchDistribution& dist, const SmoothnessModel& model) {
  if (model.dim() != dist.d) throw std::invalid_argument("sketch: model dimension mismatch");
  const double d = dist.d;
  const double r = dist.r;
  switch (dist.family) {
    case SketchFamily::haar: {
      const double beta = haar_beta(d, r);
      return (d / r) * (1.0 - beta + beta * model.effective_rank() / d);
    }
    case SketchFamily::coordinate:
      return (d / r) * ((r - 1.0) / (d - 1.0) + (d - r) / (d - 1.0) * model.diag_ratio());
    case SketchFamily::gaussian:
      return (r + 1.0 + model.effective_rank()) / r;
    default:
      return 1.0;
  }
}

double oracle_factor(const SketchDistribution& dist, const SmoothnessModel& model) {
  return std::sqrt(omega(dist) * ell(dist, model)) * dist.r;
}

SketchConstants sketch_constants(const SketchDistribution& dist, const SmoothnessModel& model) {
  SketchConstants constants;
  constants.omega = omega(dist);
  constants.ell = ell(dist, model);
  constants.oracle_factor = std::sqrt(constants.omega * constants.ell) * dist.r;
  if (dist.family == SketchFamily::haar) {
    constants.beta = haar_beta(dist.d, dist.r);
  }
  return constants;
}

double q_at_one(SketchFamily family, int d, const SmoothnessModel& model) {
  if (d < 2) throw std::invalid_argument("sketch: ambient dimension must be at least 2");
  if (model.dim() != d) throw std::invalid_argument("sketch: model dimension mismatch");
  const double dd = d;
  switch (family) {
    case SketchFamily::haar:
      return dd * std::sqrt((model.effective_rank() + 2.0) / (dd + 2.0));
    case SketchFamily::coordinate:
      return dd * std::sqrt(model.diag_ratio());
    case SketchFamily::gaussian:
      return std::sqrt((dd + 2.0) * (model.effective_rank() + 2.0));
    default:
      throw std::invalid_argument("sketch: q factor is defined for the random families only");
  }
}

int optimal_r(SketchFamily family, int d, const SmoothnessModel& model) {
  if (family == SketchFamily::identity) return d;
  int best_r = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= d; ++r) {
    const double factor = oracle_factor(SketchDistribution(family, d, r), model);
    if (factor < best * (1.0 - 1e-12)) {
      best = factor;
      best_r = r;
    }
  }
  return best_r;
}

Eigen::MatrixXd exact_interaction_moment(const SketchDistribution& dist, const SmoothnessModel& model) {
  if (dist.d > 200) throw std::invalid_argument("sketch: moment materialization capped at d = 200");
  if (model.dim() != dist.d) throw std::invalid_argument("sketch: model dimension mismatch");
  const double d = dist.d;
  const double r = dist.r;
  const Eigen::MatrixXd lambda = model.materialize();
  switch (dist.family) {
    case SketchFamily::haar: {
      const double beta = haar_beta(d, r);
      Eigen::MatrixXd out = (d / r) * (1.0 - beta) * lambda;
      out.diagonal().array() += (beta / r) * lambda.trace();
      return out;
    }
    case SketchFamily::coordinate: {
      Eigen::MatrixXd out = (d / r) * ((r - 1.0) / (d - 1.0)) * lambda;
      out.diagonal() += (d / r) * ((d - r) / (d - 1.0)) * lambda.diagonal();
      return out;
    }
    case SketchFamily::gaussian: {
      Eigen::MatrixXd out = ((r + 1.0) / r) * lambda;
      out.diagonal().array() += lambda.trace() / r;
      return out;
    }
    default:
      return lambda;
  }
}

}  // namespace rsnag
