#include "sensitest/inference.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace sensitest {

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged: return "converged";
    case FitStatus::separated: return "separated";
    case FitStatus::singular_information: return "singular_information";
    case FitStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

std::string_view to_string(FiellerSet::Kind kind) {
  switch (kind) {
    case FiellerSet::Kind::bounded: return "bounded";
    case FiellerSet::Kind::exclusive: return "exclusive";
    case FiellerSet::Kind::whole_line: return "whole_line";
  }
  return "unknown";
}

namespace {

void check_trials(std::span<const Trial> trials) {
  for (const auto& t : trials) {
    if (!std::isfinite(t.x)) throw DomainError("non-finite stimulus level in path");
    check_outcome(t.y);
  }
}

}  // namespace

double log_likelihood(std::span<const Trial> trials, const ModelSpec& model) {
  double sum = 0.0;
  for (const auto& t : trials) sum += loglik_term(model, t.x, t.y);
  return sum;
}

Vec2 log_likelihood_gradient(std::span<const Trial> trials, const ModelSpec& model) {
  Vec2 g = Vec2::Zero();
  for (const auto& t : trials) g += score(model, t.x, t.y);
  return g;
}

Mat2 log_likelihood_hessian(std::span<const Trial> trials, const ModelSpec& model) {
  Mat2 hess = Mat2::Zero();
  for (const auto& t : trials) {
    const auto ev = link_eval(model.link, model.eta(t.x));
    const double c = loglik_curvature(model.link, ev, t.y);
    hess(0, 0) += c;
    hess(0, 1) += c * t.x;
    hess(1, 1) += c * t.x * t.x;
  }
  hess(1, 0) = hess(0, 1);
  return hess;
}

bool is_separated(std::span<const Trial> trials) {
  double min1 = INFINITY, max1 = -INFINITY, min0 = INFINITY, max0 = -INFINITY;
  for (const auto& t : trials) {
    if (t.y == 1) {
      min1 = std::min(min1, t.x), max1 = std::max(max1, t.x);
    } else {
      min0 = std::min(min0, t.x), max0 = std::max(max0, t.x);
    }
  }
  if (!std::isfinite(min1) || !std::isfinite(min0)) return true;  // one outcome class only
  return max0 <= min1 || max1 <= min0;
}

EstimateResult fit_mle(std::span<const Trial> trials, Link link, const FitOptions& options) {
  check_trials(trials);
  EstimateResult out;
  out.n = trials.size();
  ModelSpec model{link, Vec2::Zero()};

  if (trials.empty() || is_separated(trials)) {
    out.status = FitStatus::separated;
    out.loglik = log_likelihood(trials, model);
    out.J_hat = plugin_information(trials, model.theta, link);
    return out;
  }

  double ll = log_likelihood(trials, model);
  FitStatus status = FitStatus::max_iter;
  Vec2 grad = log_likelihood_gradient(trials, model);
  int it = 0;
  for (; it < options.max_iter; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() < options.grad_tol) {
      status = FitStatus::converged;
      break;
    }
    const Mat2 neg_hess = -log_likelihood_hessian(trials, model);
    const Eigen::LDLT<Mat2> ldlt(neg_hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
      status = FitStatus::singular_information;
      break;
    }
    const Vec2 step = ldlt.solve(grad);

    double t = 1.0;
    ModelSpec trial_model = model;
    double trial_ll = -INFINITY;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving, t /= 2) {
      trial_model.theta = model.theta + t * step;
      trial_ll = log_likelihood(trials, trial_model);
      if (trial_ll >= ll - 1e-12 * (1.0 + std::abs(ll))) {
        improved = true;
        break;
      }
    }
    if (!improved) {
      // No ascent left at working precision.
      status = grad.lpNorm<Eigen::Infinity>() < std::sqrt(options.grad_tol) ? FitStatus::converged
                                                                               : FitStatus::max_iter;
      break;
    }
    model.theta = trial_model.theta;
    ll = trial_ll;
    grad = log_likelihood_gradient(trials, model);
    if (model.theta.norm() > options.divergence_norm) {
      status = FitStatus::separated;
      break;
    }
  }
  if (it == options.max_iter && grad.lpNorm<Eigen::Infinity>() < options.grad_tol) status = FitStatus::converged;

  out.theta_hat = model.theta;
  out.loglik = ll;
  out.iterations = it;
  out.grad_norm = grad.lpNorm<Eigen::Infinity>();
  out.J_hat = plugin_information(trials, model.theta, link);
  if (status == FitStatus::converged) {
    const Eigen::LLT<Mat2> llt(out.J_hat);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Mat2>(out.J_hat, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (llt.info() != Eigen::Success || !(min_eig > 1e-14 * out.J_hat.trace())) {
      status = FitStatus::singular_information;
    } else {
      out.cov_hat = llt.solve(Mat2::Identity()) / static_cast<double>(out.n);
    }
  }
  out.status = status;
  return out;
}

EstimateResult fit_mle(const ExperimentPath& path, Link link, const FitOptions& options) {
  return fit_mle(std::span<const Trial>(path.trials), link, options);
}

Mat2 plugin_information(std::span<const Trial> trials, const Vec2& theta, Link link) {
  Mat2 J = Mat2::Zero();
  if (trials.empty()) return J;
  const ModelSpec model{link, theta};
  for (const auto& t : trials) J += fisher_unit(model, t.x);
  return J / static_cast<double>(trials.size());
}

ScoreProcess score_process(std::span<const Trial> trials, const Vec2& theta, Link link) {
  const ModelSpec model{link, theta};
  const double n = static_cast<double>(trials.size());
  ScoreProcess out;
  out.U.reserve(trials.size() + 1);
  out.qv.reserve(trials.size() + 1);
  out.U.push_back(Vec2::Zero());
  out.qv.push_back(Mat2::Zero());
  Vec2 score_sum = Vec2::Zero();
  Mat2 info_sum = Mat2::Zero();
  for (const auto& t : trials) {
    score_sum += score(model, t.x, t.y);
    // x_i is fixed by the first i-1 trials, so the conditional second
    // moment of the score is J_theta(x_i).
    info_sum += fisher_unit(model, t.x);
    out.U.push_back(score_sum / std::sqrt(n));
    out.qv.push_back(info_sum / n);
  }
  return out;
}

LanDiagnostics lan_remainder(std::span<const Trial> trials, const Vec2& theta0, const Vec2& h, Link link) {
  LanDiagnostics out;
  out.h = h;
  if (trials.empty()) return out;
  const double n = static_cast<double>(trials.size());
  const ModelSpec base{link, theta0};
  const ModelSpec shifted{link, theta0 + h / std::sqrt(n)};
  double A = 0.0;
  for (const auto& t : trials) A += loglik_term(shifted, t.x, t.y) - loglik_term(base, t.x, t.y);
  const auto process = score_process(trials, theta0, link);
  out.A_n = A;
  out.U_nn = process.U.back();
  out.qv_nn = process.qv.back();
  out.remainder = out.A_n - h.dot(out.U_nn) + 0.5 * h.dot(out.qv_nn * h);
  return out;
}

double quantile_point(const Vec2& theta, Link link, double q) {
  if (theta(1) == 0.0) throw SingularError("quantile_point: slope is zero");
  return (inverse_link(link, q) - theta(0)) / theta(1);
}

namespace {

double two_sided_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  return normal_quantile(0.5 + level / 2);
}

}  // namespace

Interval ci_wald(const EstimateResult& est, Link link, double q, double level) {
  if (est.status != FitStatus::converged) throw SingularError("ci_wald: estimate did not converge");
  const double beta = est.theta_hat(1);
  const double gamma = quantile_point(est.theta_hat, link, q);
  const Vec2 g(-1.0 / beta, -gamma / beta);
  const double var = g.dot(est.cov_hat * g);
  if (!std::isfinite(var) || var < 0.0) throw SingularError("ci_wald: covariance is not positive semidefinite");
  const double half = two_sided_z(level) * std::sqrt(var);
  return {gamma - half, gamma + half};
}

bool FiellerSet::contains(double v) const {
  switch (kind) {
    case Kind::bounded: return lower <= v && v <= upper;
    case Kind::exclusive: return v <= lower || v >= upper;
    case Kind::whole_line: return true;
  }
  return false;
}

double FiellerSet::width() const { return kind == Kind::bounded ? upper - lower : INFINITY; }

FiellerSet ci_fieller(const EstimateResult& est, Link link, double q, double level) {
  const double z = two_sided_z(level);
  const double z2 = z * z;
  const double alpha = est.theta_hat(0);
  const double beta = est.theta_hat(1);
  const double g = inverse_link(link, q);
  const double v_aa = est.cov_hat(0, 0);
  const double v_ab = est.cov_hat(0, 1);
  const double v_bb = est.cov_hat(1, 1);
  const double r = g - alpha;

  // A gamma^2 + B gamma + C <= 0.
  const double A = beta * beta - z2 * v_bb;
  const double B = -2.0 * (beta * r + z2 * v_ab);
  const double C = r * r - z2 * v_aa;
  const double disc = B * B - 4.0 * A * C;

  FiellerSet out;
  if (A > 0.0) {
    // The point estimate r / beta always satisfies the inequality, so a
    // negative discriminant is rounding only.
    const double root = std::sqrt(std::max(disc, 0.0));
    out.kind = FiellerSet::Kind::bounded;
    // Stable root pair.
    if (root == 0.0) {
      out.lower = out.upper = -B / (2.0 * A);
    } else {
      const double qq = -0.5 * (B + std::copysign(root, B));
      const double r1 = qq / A;
      const double r2 = qq != 0.0 ? C / qq : -r1;
      out.lower = std::min(r1, r2);
      out.upper = std::max(r1, r2);
    }
    return out;
  }
  if (A == 0.0) {
    if (B > 0.0) return {FiellerSet::Kind::exclusive, -C / B, INFINITY};
    if (B < 0.0) return {FiellerSet::Kind::exclusive, -INFINITY, -C / B};
    return {FiellerSet::Kind::whole_line, -INFINITY, INFINITY};
  }
  if (disc <= 0.0) return {FiellerSet::Kind::whole_line, -INFINITY, INFINITY};
  const double root = std::sqrt(disc);
  const double r1 = (-B - root) / (2.0 * A);
  const double r2 = (-B + root) / (2.0 * A);
  return {FiellerSet::Kind::exclusive, std::min(r1, r2), std::max(r1, r2)};
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty sample");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

LanTrend lan_trend(const DesignRule& rule, const ModelSpec& model, const Vec2& h,
                   const std::vector<std::size_t>& n_grid, std::size_t reps, SimSeed seed) {
  if (n_grid.empty() || reps < 1) throw DomainError("lan_trend: need a non-empty n grid and reps >= 1");
  LanTrend out;
  out.design = std::string(design_name(rule));
  out.theta0 = model.theta;
  out.link = model.link;
  out.h = h;
  out.reps = reps;
  out.n_grid = n_grid;
  for (const std::size_t n : n_grid) {
    std::vector<double> values;
    values.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      const auto path = simulate_path(rule, model, n, {seed.master, seed.stream + r});
      values.push_back(std::abs(lan_remainder(path.trials, model.theta, h, model.link).remainder));
    }
    out.median_abs_remainder.push_back(median(std::move(values)));
  }
  out.decreasing = true;
  for (std::size_t i = 1; i < out.median_abs_remainder.size(); ++i) {
    out.decreasing = out.decreasing && out.median_abs_remainder[i] < out.median_abs_remainder[i - 1];
  }
  return out;
}

}  // namespace sensitest
