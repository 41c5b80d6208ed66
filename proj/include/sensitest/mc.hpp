#pragma once

#include "sensitest/design.hpp"
#include "sensitest/inference.hpp"
#include "sensitest/model.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sensitest {

struct McConfig {
  DesignRule rule = Bruceton{0.0, 0.5};
  ModelSpec model{Link::logit, Vec2(0.0, 1.0)};  // truth theta0
  std::size_t n = 500;
  std::size_t reps = 2000;
  std::uint64_t master_seed = 1;
  Link link_for_fit = Link::logit;
  double q = 0.5;
  double level = 0.95;
  /// Multiplies every cov_hat before intervals are formed (1 = plug-in).
  double cov_inflation = 1.0;
  /// Overrides the automatic reference information when set.
  std::optional<Mat2> reference_J;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Requirements for publishing a report (reps >= 100, n >= 50). run_mc itself
/// accepts smaller runs for testing.
void validate_for_report(const McConfig& cfg);

struct Replication {
  std::size_t rep = 0;
  FitStatus status = FitStatus::max_iter;
  Vec2 theta_hat = Vec2::Zero();
  Mat2 J_hat = Mat2::Zero();
  double wald_lower = 0.0, wald_upper = 0.0;
  FiellerSet fieller;
  bool wald_covers = false;
  bool fieller_covers = false;
  double qv_condition = 0.0;  // condition number of <U,U>_n at theta0
};

struct McReport {
  std::string design;
  Vec2 theta0 = Vec2::Zero();
  std::size_t n = 0;
  std::size_t reps = 0;
  std::size_t kept = 0;
  std::array<std::size_t, 4> status_counts{};  // indexed by FitStatus
  double attrition = 0.0;
  bool unreliable = false;  // more than half the fits did not converge

  Vec2 mean = Vec2::Zero();     // of sqrt(n) (theta_hat - theta0)
  Vec2 mean_se = Vec2::Zero();
  Mat2 covariance = Mat2::Zero();

  std::string reference_source;  // chain_stationary | path_average | override | none
  std::optional<Mat2> reference_J;
  std::optional<Mat2> reference_J_inv;
  std::optional<double> covariance_rel_error;  // ||cov - J^{-1}||_F / ||J^{-1}||_F
  std::optional<std::array<double, 2>> ks;
  std::optional<double> median_J_hat_distance;  // median ||J_hat - J||_F

  double q = 0.5;
  double level = 0.95;
  double gamma_q = 0.0;
  double coverage_wald = 0.0;
  double coverage_fieller = 0.0;
  std::size_t fieller_unbounded = 0;
  double min_fieller_wald_ratio = 0.0;  // over kept reps with bounded Fieller sets
  double median_qv_condition = 0.0;

  std::vector<Replication> replications;
};

McReport run_mc(const McConfig& cfg);

/// Reference information for the design: the stationary chain for Bruceton,
/// a long-path average of <U,U>_n for Langlie, none otherwise.
std::optional<Mat2> reference_information(const McConfig& cfg, std::string* source = nullptr);

/// Kolmogorov-Smirnov distance of a sample from the standard normal.
double ks_standard_normal(std::vector<double> sample);

/// Standardizes sqrt(n) (theta_hat - theta0) by J^{1/2} and returns the KS
/// distance of each coordinate. Throws SingularError for non-positive-definite J.
std::array<double, 2> normality_stats(std::span<const Vec2> estimates, const Vec2& theta0, std::size_t n,
                                      const Mat2& J);

/// Symmetric square root of a positive-definite 2x2 matrix.
Mat2 sqrtm_spd(const Mat2& J);

struct CoveragePair {
  double wald = 0.0;
  double fieller = 0.0;
};

CoveragePair coverage(McConfig cfg, double q, double level);

}  // namespace sensitest
