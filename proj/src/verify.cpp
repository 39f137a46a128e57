#include "rsnag/verify.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rsnag {

namespace {

// Entrywise mean/variance accumulator for matrix-valued samples.
struct MatrixMoments {
  explicit MatrixMoments(int d)
      : sum(Eigen::MatrixXd::Zero(d, d)), sum_sq(Eigen::MatrixXd::Zero(d, d)) {}

  void add(const Eigen::MatrixXd& sample) {
    sum += sample;
    sum_sq += sample.cwiseAbs2();
    ++count;
  }

  Eigen::MatrixXd mean() const { return sum / static_cast<double>(count); }

  Eigen::MatrixXd standard_error() const {
    const double n = static_cast<double>(count);
    Eigen::MatrixXd var = (sum_sq / n - mean().cwiseAbs2()).cwiseMax(0.0);
    return (var / n).cwiseSqrt();
  }

  Eigen::MatrixXd sum, sum_sq;
  long count = 0;
};

struct Comparison {
  double max_dev = 0.0;
  double se_at_max = 0.0;
  bool pass = true;
};

Comparison compare(const MatrixMoments& moments, const Eigen::MatrixXd& target) {
  const Eigen::MatrixXd mean = moments.mean();
  const Eigen::MatrixXd se = moments.standard_error();
  Comparison out;
  for (Eigen::Index j = 0; j < target.cols(); ++j) {
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
      const double dev = std::abs(mean(i, j) - target(i, j));
      if (dev > out.max_dev) {
        out.max_dev = dev;
        out.se_at_max = se(i, j);
      }
      if (dev > 5.0 * se(i, j) + 1e-12) out.pass = false;
    }
  }
  return out;
}

double binomial(int n, int k) {
  double result = 1.0;
  for (int i = 0; i < k; ++i) result = result * (n - i) / (i + 1);
  return result;
}

}  // namespace

MomentReport check_moments(const SketchDistribution& dist, const SmoothnessModel& model,
                           long n_samples, std::uint64_t seed) {
  return check_moments_with_sampler(dist, model, n_samples, seed,
                                    [&dist](Rng& rng) { return sample(dist, rng); });
}

MomentReport check_moments_with_sampler(const SketchDistribution& dist, const SmoothnessModel& model,
                                        long n_samples, std::uint64_t seed,
                                        const SketchSampler& sampler) {
  if (n_samples < 1000) throw std::invalid_argument("check_moments: need at least 1000 samples");
  if (dist.d > 50) throw std::invalid_argument("check_moments: materialized comparison capped at d = 50");
  const int d = dist.d;
  const Eigen::MatrixXd lambda = model.materialize();

  MatrixMoments first(d), second(d), interaction(d);
  for (long s = 0; s < n_samples; ++s) {
    Rng rng = Rng::stream(seed, Rng::Stream::probe, static_cast<std::uint64_t>(s));
    const SketchMatrix sketch = sampler(rng);
    const Eigen::MatrixXd p = sketch.dense();
    const Eigen::MatrixXd outer = p * p.transpose();
    first.add(outer);
    second.add(outer * outer);
    interaction.add(outer * lambda * outer);
  }

  const Comparison c1 = compare(first, Eigen::MatrixXd::Identity(d, d));
  const Comparison c2 = compare(second, omega(dist) * Eigen::MatrixXd::Identity(d, d));
  const Comparison c3 = compare(interaction, exact_interaction_moment(dist, model));

  MomentReport report;
  report.family = dist.family;
  report.d = d;
  report.r = dist.r;
  report.n_samples = n_samples;
  report.max_dev_unbiased = c1.max_dev;
  report.se_at_max_unbiased = c1.se_at_max;
  report.max_dev_second = c2.max_dev;
  report.se_at_max_second = c2.se_at_max;
  report.max_dev_interaction = c3.max_dev;
  report.se_at_max_interaction = c3.se_at_max;
  report.pass = c1.pass && c2.pass && c3.pass;
  if (!c1.pass) report.detail += "violated: unbiasedness E[P P^T] = I; ";
  if (!c2.pass) report.detail += "violated: second moment E[(P P^T)^2] = omega I; ";
  if (!c3.pass) report.detail += "violated: interaction moment E[P P^T Lambda P P^T] closed form; ";
  return report;
}

Eigen::MatrixXd coordinate_enumeration_moment(int d, int r, const SmoothnessModel& model) {
  if (model.dim() != d) throw std::invalid_argument("enumeration: model dimension mismatch");
  if (binomial(d, r) > 10000.0) throw std::invalid_argument("enumeration: too many subsets");
  const Eigen::MatrixXd lambda = model.materialize();
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  long count = 0;
  std::vector<int> subset(r);
  for (int i = 0; i < r; ++i) subset[i] = i;
  while (true) {
    const SketchMatrix sketch = coordinate_sketch_from_indices(d, subset);
    const Eigen::MatrixXd p = sketch.dense();
    const Eigen::MatrixXd outer = p * p.transpose();
    total += outer * lambda * outer;
    ++count;
    // next lexicographic r-subset of {0..d-1}
    int i = r - 1;
    while (i >= 0 && subset[i] == d - r + i) --i;
    if (i < 0) break;
    ++subset[i];
    for (int j = i + 1; j < r; ++j) subset[j] = subset[j - 1] + 1;
  }
  return total / static_cast<double>(count);
}

namespace {

double convex_lyapunov(double accum, double gap, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& x_star) {
  return accum * gap + 0.5 * (z - x_star).squaredNorm();
}

double strong_lyapunov(double gap, double mu, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& x_star) {
  return gap + 0.5 * mu * (z - x_star).squaredNorm();
}

struct Welford {
  void add(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }
  double se() const {
    if (count < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;
};

void require_known_optimum(const Objective& obj) {
  if (!obj.optimum_value() || !obj.optimum_point()) {
    throw std::invalid_argument("lyapunov probe: objective optimum must be known");
  }
}

}  // namespace

LyapunovProbe check_lyapunov_convex(const ConvexState& state, const Objective& obj,
                                    const SketchDistribution& dist, long n_samples,
                                    std::uint64_t seed) {
  require_known_optimum(obj);
  const double f_star = *obj.optimum_value();
  const Eigen::VectorXd& x_star = *obj.optimum_point();

  const ConvexStepPlan plan = plan_convex_step(state);
  const Eigen::VectorXd grad_y = obj.grad(plan.y);

  Welford stats;
  for (long s = 0; s < n_samples; ++s) {
    Rng rng = Rng::stream(seed, Rng::Stream::probe, static_cast<std::uint64_t>(s));
    const SketchMatrix sketch = sample(dist, rng);
    ConvexState next = state;
    apply_convex_step(next, plan, sketch.project(grad_y));
    stats.add(convex_lyapunov(next.accum, obj.value(next.x) - f_star, next.z, x_star));
  }

  LyapunovProbe probe;
  probe.method = method_name(Method::rs_nag_c);
  probe.state_index = state.k;
  probe.n_samples = n_samples;
  probe.current = convex_lyapunov(state.accum, obj.value(state.x) - f_star, state.z, x_star);
  probe.target = probe.current;
  probe.mean_next = stats.mean;
  probe.se_next = stats.se();
  probe.pass = probe.mean_next <= probe.target + 3.0 * probe.se_next + 1e-12;
  if (!probe.pass) {
    probe.detail =
        "violated: conditional contraction E[A'(f(x')-f*) + 1/2||z'-x*||^2] <= A(f(x)-f*) + "
        "1/2||z-x*||^2";
  }
  return probe;
}

LyapunovProbe check_lyapunov_sc(const StrongState& state, const Objective& obj,
                                const SketchDistribution& dist, long n_samples,
                                std::uint64_t seed) {
  require_known_optimum(obj);
  if (!(obj.mu() > 0.0)) throw std::invalid_argument("lyapunov probe: mu must be positive");
  const double f_star = *obj.optimum_value();
  const Eigen::VectorXd& x_star = *obj.optimum_point();

  const Eigen::VectorXd y = plan_strong_step(state);
  const Eigen::VectorXd grad_y = obj.grad(y);

  Welford stats;
  for (long s = 0; s < n_samples; ++s) {
    Rng rng = Rng::stream(seed, Rng::Stream::probe, static_cast<std::uint64_t>(s));
    const SketchMatrix sketch = sample(dist, rng);
    StrongState next = state;
    apply_strong_step(next, y, sketch.project(grad_y));
    stats.add(strong_lyapunov(obj.value(next.x) - f_star, obj.mu(), next.z, x_star));
  }

  LyapunovProbe probe;
  probe.method = method_name(Method::rs_nag_sc);
  probe.state_index = state.k;
  probe.n_samples = n_samples;
  probe.current = strong_lyapunov(obj.value(state.x) - f_star, obj.mu(), state.z, x_star);
  probe.target = (1.0 - state.theta) * probe.current;
  probe.mean_next = stats.mean;
  probe.se_next = stats.se();
  probe.pass = probe.mean_next <= probe.target + 3.0 * probe.se_next + 1e-12;
  if (!probe.pass) {
    probe.detail =
        "violated: conditional contraction E[f(x')-f* + mu/2||z'-x*||^2] <= "
        "(1-theta)(f(x)-f* + mu/2||z-x*||^2)";
  }
  return probe;
}

std::vector<ConvexState> convex_probe_states(const Objective& obj, const SketchDistribution& dist,
                                             const std::vector<long>& iteration_counts,
                                             std::uint64_t seed) {
  const double omega_c = omega(dist);
  const double ell_c = ell(dist, obj.smoothness());
  Rng init = Rng::stream(seed, Rng::Stream::init, 0);
  Eigen::VectorXd x0(obj.dim());
  for (int i = 0; i < obj.dim(); ++i) x0[i] = init.normal();
  ConvexState state = make_convex_state(std::move(x0), obj.lipschitz(), omega_c, ell_c);

  std::vector<ConvexState> out;
  long next_idx = 0;
  long max_k = 0;
  for (long k : iteration_counts) max_k = std::max(max_k, k);
  for (long k = 0; k <= max_k; ++k) {
    while (next_idx < static_cast<long>(iteration_counts.size()) &&
           iteration_counts[next_idx] == k) {
      out.push_back(state);
      ++next_idx;
    }
    if (k == max_k) break;
    Rng rng = Rng::stream(seed, Rng::Stream::sketch, static_cast<std::uint64_t>(k));
    rs_nag_c_step(state, obj, sample(dist, rng));
  }
  return out;
}

std::vector<StrongState> strong_probe_states(const Objective& obj, const SketchDistribution& dist,
                                             const std::vector<long>& iteration_counts,
                                             std::uint64_t seed) {
  const double omega_c = omega(dist);
  const double ell_c = ell(dist, obj.smoothness());
  Rng init = Rng::stream(seed, Rng::Stream::init, 0);
  Eigen::VectorXd x0(obj.dim());
  for (int i = 0; i < obj.dim(); ++i) x0[i] = init.normal();
  StrongState state =
      make_strong_state(std::move(x0), obj.lipschitz(), obj.mu(), omega_c, ell_c);

  std::vector<StrongState> out;
  long next_idx = 0;
  long max_k = 0;
  for (long k : iteration_counts) max_k = std::max(max_k, k);
  for (long k = 0; k <= max_k; ++k) {
    while (next_idx < static_cast<long>(iteration_counts.size()) &&
           iteration_counts[next_idx] == k) {
      out.push_back(state);
      ++next_idx;
    }
    if (k == max_k) break;
    Rng rng = Rng::stream(seed, Rng::Stream::sketch, static_cast<std::uint64_t>(k));
    rs_nag_sc_step(state, obj, sample(dist, rng));
  }
  return out;
}

namespace {

SketchMatrix random_permutation_sketch(int d, Rng& rng) {
  SketchDistribution dist(SketchFamily::coordinate, d, d);
  return sample(dist, rng);
}

}  // namespace

std::vector<Eigen::VectorXd> classical_nag_convex(const Objective& obj, const Eigen::VectorXd& x0,
                                                  long steps) {
  const double lip = obj.lipschitz();
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(steps + 1);
  xs.push_back(x0);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd y = x0;
  double t = 1.0;
  for (long k = 0; k < steps; ++k) {
    Eigen::VectorXd x_next = y - obj.grad(y) / lip;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x = std::move(x_next);
    t = t_next;
    xs.push_back(x);
  }
  return xs;
}

std::vector<Eigen::VectorXd> classical_nag_sc(const Objective& obj, const Eigen::VectorXd& x0,
                                              long steps) {
  const double lip = obj.lipschitz();
  const double mu = obj.mu();
  if (!(mu > 0.0)) throw std::invalid_argument("classical nag: mu must be positive");
  const double beta = (std::sqrt(lip) - std::sqrt(mu)) / (std::sqrt(lip) + std::sqrt(mu));
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(steps + 1);
  xs.push_back(x0);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd y = x0;
  for (long k = 0; k < steps; ++k) {
    Eigen::VectorXd x_next = y - obj.grad(y) / lip;
    y = x_next + beta * (x_next - x);
    x = std::move(x_next);
    xs.push_back(x);
  }
  return xs;
}

ReductionReport check_reduction_convex(const Objective& obj, long steps, std::uint64_t seed) {
  const int d = obj.dim();
  Rng init = Rng::stream(seed, Rng::Stream::init, 0);
  Eigen::VectorXd x0(d);
  for (int i = 0; i < d; ++i) x0[i] = init.normal();

  const std::vector<Eigen::VectorXd> reference = classical_nag_convex(obj, x0, steps);

  ConvexState state = make_convex_state(x0, obj.lipschitz(), 1.0, 1.0);
  ReductionReport report;
  report.method = method_name(Method::rs_nag_c);
  report.steps = steps;
  for (long k = 0; k < steps; ++k) {
    Rng rng = Rng::stream(seed, Rng::Stream::sketch, static_cast<std::uint64_t>(k));
    rs_nag_c_step(state, obj, random_permutation_sketch(d, rng));
    report.max_deviation = std::max(report.max_deviation, (state.x - reference[k + 1]).norm());
  }
  report.pass = report.max_deviation <= 1e-10;
  return report;
}

ReductionReport check_reduction_sc(const Objective& obj, long steps, std::uint64_t seed) {
  const int d = obj.dim();
  Rng init = Rng::stream(seed, Rng::Stream::init, 0);
  Eigen::VectorXd x0(d);
  for (int i = 0; i < d; ++i) x0[i] = init.normal();

  const std::vector<Eigen::VectorXd> reference = classical_nag_sc(obj, x0, steps);

  StrongState state = make_strong_state(x0, obj.lipschitz(), obj.mu(), 1.0, 1.0);
  ReductionReport report;
  report.method = method_name(Method::rs_nag_sc);
  report.steps = steps;
  for (long k = 0; k < steps; ++k) {
    Rng rng = Rng::stream(seed, Rng::Stream::sketch, static_cast<std::uint64_t>(k));
    rs_nag_sc_step(state, obj, random_permutation_sketch(d, rng));
    report.max_deviation = std::max(report.max_deviation, (state.x - reference[k + 1]).norm());
  }
  report.pass = report.max_deviation <= 1e-10;
  return report;
}

SmoothnessModel random_psd_model(int d, Rng& rng, double mu) {
  Eigen::MatrixXd b(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) b(i, j) = rng.normal();
  Eigen::MatrixXd gram = b.transpose() * b / static_cast<double>(d);
  if (mu > 0.0) gram.diagonal().array() += mu;
  return SmoothnessModel::dense(std::move(gram), mu);
}

namespace {

struct MarginTracker {
  void feed(double slack) { worst = std::min(worst, slack); }
  bool pass(double tol = 0.0) const { return worst >= -tol; }
  double worst = std::numeric_limits<double>::infinity();
};

}  // namespace

std::vector<ConstantCheck> check_constants(SketchFamily family, int d_max, int models_per_d,
                                           std::uint64_t seed) {
  Rng rng = Rng::stream(seed, Rng::Stream::probe, 0);
  MarginTracker omega_lower, ell_lower, ell_upper, product_lower;
  MarginTracker q_gh_relation, q_hc_relation, q_ranges, model_ranges;

  for (int d = 2; d <= d_max; ++d) {
    for (int m = 0; m < models_per_d; ++m) {
      const SmoothnessModel model = random_psd_model(d, rng);
      const double r_eff = model.effective_rank();
      const double delta = model.diag_ratio();
      model_ranges.feed(r_eff - 1.0);
      model_ranges.feed(d - r_eff);
      model_ranges.feed(delta - 1.0 / d);
      model_ranges.feed(1.0 - delta);
      model_ranges.feed(delta - r_eff / d);

      for (int r = 1; r <= d; ++r) {
        const SketchDistribution dist(family, d, family == SketchFamily::identity ? d : r);
        const double w = omega(dist);
        const double l = ell(dist, model);
        omega_lower.feed(w - static_cast<double>(dist.d) / dist.r);
        ell_lower.feed(l - 1.0);
        ell_upper.feed(w - l);
        product_lower.feed(w * l - 1.0);
        if (family == SketchFamily::identity) break;
      }

      if (family != SketchFamily::identity) {
        const double q_h = q_at_one(SketchFamily::haar, d, model);
        const double q_c = q_at_one(SketchFamily::coordinate, d, model);
        const double q_g = q_at_one(SketchFamily::gaussian, d, model);
        q_gh_relation.feed(1e-12 - std::abs(q_g - (1.0 + 2.0 / d) * q_h) / q_g);
        q_hc_relation.feed(std::sqrt(3.0) * q_c - q_h + 1e-12);
        q_ranges.feed(q_c - std::sqrt(static_cast<double>(d)));
        q_ranges.feed(d - q_c);
        q_ranges.feed(q_h - d * std::sqrt(3.0 / (d + 2.0)));
        q_ranges.feed(d - q_h);
        q_ranges.feed(q_g - std::sqrt(3.0 * (d + 2.0)));
        q_ranges.feed(d + 2.0 - q_g);
      }
    }
  }

  const double tol = 1e-9;
  std::vector<ConstantCheck> checks;
  auto push = [&](const std::string& name, const MarginTracker& t, const char* identity) {
    ConstantCheck c;
    c.name = name;
    c.pass = t.pass(tol);
    c.worst_margin = t.worst;
    if (!c.pass) c.detail = std::string("violated: ") + identity;
    checks.push_back(std::move(c));
  };
  push("omega >= d/r", omega_lower, "second-moment lower bound omega >= d/r");
  push("ell >= 1", ell_lower, "interaction lower bound ell >= 1");
  push("ell <= omega", ell_upper, "convention ell <= omega");
  push("omega * ell >= 1", product_lower, "product bound omega * ell >= 1");
  push("model scalar ranges", model_ranges,
       "1 <= r_eff <= d, 1/d <= delta_diag <= 1, delta_diag >= r_eff/d");
  if (family != SketchFamily::identity) {
    push("Q_G = (1 + 2/d) Q_H", q_gh_relation, "identity Q_G = (1+2/d) Q_H");
    push("Q_H <= sqrt(3) Q_C", q_hc_relation, "bound Q_H <= sqrt(3) Q_C");
    push("Q ranges", q_ranges,
         "sqrt(d) <= Q_C <= d, d sqrt(3/(d+2)) <= Q_H <= d, sqrt(3(d+2)) <= Q_G <= d+2");
  }
  return checks;
}

}  // namespace rsnag
