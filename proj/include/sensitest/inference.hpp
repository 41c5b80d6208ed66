#pragma once

#include "sensitest/design.hpp"
#include "sensitest/model.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sensitest {

enum class FitStatus { converged, separated, singular_information, max_iter };

std::string_view to_string(FitStatus status);

struct EstimateResult {
  Vec2 theta_hat = Vec2::Zero();
  /// Plug-in information (1/n) sum_i J_theta_hat(x_i).
  Mat2 J_hat = Mat2::Zero();
  /// J_hat^{-1} / n when converged, zero otherwise.
  Mat2 cov_hat = Mat2::Zero();
  FitStatus status = FitStatus::max_iter;
  std::size_t n = 0;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  double grad_norm = std::numeric_limits<double>::infinity();
};

struct FitOptions {
  double grad_tol = 1e-8;  // on the infinity norm of the summed score
  int max_iter = 100;
  /// ||theta|| beyond this is treated as divergence to infinity (separation).
  double divergence_norm = 1e3;
};

/// Sum of log f_theta(y_i | x_i).
double log_likelihood(std::span<const Trial> trials, const ModelSpec& model);
/// Sum of scores; the gradient of log_likelihood in theta.
Vec2 log_likelihood_gradient(std::span<const Trial> trials, const ModelSpec& model);
/// Observed Hessian of log_likelihood in theta (negative semidefinite).
Mat2 log_likelihood_hessian(std::span<const Trial> trials, const ModelSpec& model);

/// True when a single threshold on x splits responses from non-responses
/// (ties allowed), in either orientation. The MLE then does not exist.
bool is_separated(std::span<const Trial> trials);

/// Newton iteration with step halving on the concave log-likelihood.
EstimateResult fit_mle(std::span<const Trial> trials, Link link, const FitOptions& options = {});
EstimateResult fit_mle(const ExperimentPath& path, Link link, const FitOptions& options = {});

/// (1/n) sum_i J_theta(x_i).
Mat2 plugin_information(std::span<const Trial> trials, const Vec2& theta, Link link);

/// Normalized score martingale and its predictable quadratic variation,
/// indexed j = 0..n (entry 0 is zero).
struct ScoreProcess {
  std::vector<Vec2> U;
  std::vector<Mat2> qv;
};

ScoreProcess score_process(std::span<const Trial> trials, const Vec2& theta, Link link);

struct LanDiagnostics {
  Vec2 h = Vec2::Zero();
  double A_n = 0.0;  // l_n(theta0 + h / sqrt n) - l_n(theta0)
  Vec2 U_nn = Vec2::Zero();
  Mat2 qv_nn = Mat2::Zero();
  double remainder = 0.0;  // A_n - h'U + h' qv h / 2
};

LanDiagnostics lan_remainder(std::span<const Trial> trials, const Vec2& theta0, const Vec2& h, Link link);

/// gamma_q = (H^{-1}(q) - alpha) / beta.
double quantile_point(const Vec2& theta, Link link, double q);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
  bool contains(double v) const { return lower <= v && v <= upper; }
};

/// Delta-method interval for gamma_q.
Interval ci_wald(const EstimateResult& est, Link link, double q, double level);

/// Fieller confidence set for gamma_q. When the quadratic's leading
/// coefficient is not positive the set is unbounded: either the complement
/// of an open interval or the whole line.
struct FiellerSet {
  enum class Kind { bounded, exclusive, whole_line };
  Kind kind = Kind::bounded;
  /// bounded: [lower, upper]; exclusive: (-inf, lower] U [upper, inf).
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v) const;
  double width() const;  // infinite unless bounded
};

std::string_view to_string(FiellerSet::Kind kind);

FiellerSet ci_fieller(const EstimateResult& est, Link link, double q, double level);

double median(std::vector<double> values);

/// Median |LAN remainder| over simulated paths at each n.
struct LanTrend {
  std::string design;
  Vec2 theta0 = Vec2::Zero();
  Link link = Link::logit;
  Vec2 h = Vec2::Zero();
  std::size_t reps = 0;
  std::vector<std::size_t> n_grid;
  std::vector<double> median_abs_remainder;
  bool decreasing = false;
};

/// Replication r uses stream seed.stream + r at every n.
LanTrend lan_trend(const DesignRule& rule, const ModelSpec& model, const Vec2& h,
                   const std::vector<std::size_t>& n_grid, std::size_t reps, SimSeed seed);

}  // namespace sensitest
