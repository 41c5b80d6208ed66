#include "sensitest/mc.hpp"

#include "sensitest/chain.hpp"
#include "sensitest/dqm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace sensitest {

void validate_for_report(const McConfig& cfg) {
  validate(cfg.rule);
  if (cfg.reps < 100) throw ValidationError("reps", "reps must be >= 100 for report generation");
  if (cfg.n < 50) throw ValidationError("n", "n must be >= 50 for report generation");
}

Mat2 sqrtm_spd(const Mat2& J) {
  const Eigen::SelfAdjointEigenSolver<Mat2> es(J);
  if (es.info() != Eigen::Success || !(es.eigenvalues()(0) > 0.0)) {
    throw SingularError("reference information is not positive definite");
  }
  return es.operatorSqrt();
}

double ks_standard_normal(std::vector<double> sample) {
  if (sample.empty()) throw DomainError("ks_standard_normal: empty sample");
  std::sort(sample.begin(), sample.end());
  const double N = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = 0.5 * std::erfc(-sample[i] / std::numbers::sqrt2);
    d = std::max({d, (static_cast<double>(i) + 1.0) / N - F, F - static_cast<double>(i) / N});
  }
  return d;
}

std::array<double, 2> normality_stats(std::span<const Vec2> estimates, const Vec2& theta0, std::size_t n,
                                      const Mat2& J) {
  const Mat2 root = sqrtm_spd(J);
  const double scale = std::sqrt(static_cast<double>(n));
  std::vector<double> first, second;
  first.reserve(estimates.size());
  second.reserve(estimates.size());
  for (const auto& est : estimates) {
    const Vec2 standardized = root * (scale * (est - theta0));
    first.push_back(standardized(0));
    second.push_back(standardized(1));
  }
  return {ks_standard_normal(std::move(first)), ks_standard_normal(std::move(second))};
}

std::optional<Mat2> reference_information(const McConfig& cfg, std::string* source) {
  if (cfg.reference_J) {
    if (source) *source = "override";
    return cfg.reference_J;
  }
  if (const auto* rule = std::get_if<Bruceton>(&cfg.rule); rule && cfg.model.beta() > 0.0) {
    // Wide enough that the truncation is invisible at double precision.
    const double median = -cfg.model.alpha() / cfg.model.beta();
    const double span = std::abs(rule->x1 - median) + 40.0 / cfg.model.beta();
    const int K = std::max(30, static_cast<int>(std::ceil(span / rule->step)));
    const auto chain = build_transition(cfg.model, rule->step, rule->x1, K);
    const auto st = stationary(chain);
    if (source) *source = "chain_stationary";
    return limiting_information(chain, st.pi).J;
  }
  if (std::holds_alternative<MarkovLanglie>(cfg.rule)) {
    const std::size_t length = std::max<std::size_t>(200'000, 100 * cfg.n);
    const auto path = simulate_path(cfg.rule, cfg.model, length, {cfg.master_seed, ~std::uint64_t{0}});
    if (source) *source = "path_average";
    return plugin_information(path.trials, cfg.model.theta, cfg.model.link);
  }
  if (source) *source = "none";
  return std::nullopt;
}

namespace {

double condition_number(const Mat2& m) {
  const auto ev = Eigen::SelfAdjointEigenSolver<Mat2>(m, Eigen::EigenvaluesOnly).eigenvalues();
  return ev(0) > 0.0 ? ev(1) / ev(0) : INFINITY;
}

Replication run_one(const McConfig& cfg, std::size_t rep, double gamma) {
  Replication out;
  out.rep = rep;
  const auto path = simulate_path(cfg.rule, cfg.model, cfg.n, {cfg.master_seed, rep});
  out.qv_condition = condition_number(plugin_information(path.trials, cfg.model.theta, cfg.model.link));
  EstimateResult est = fit_mle(path, cfg.link_for_fit);
  out.status = est.status;
  out.theta_hat = est.theta_hat;
  out.J_hat = est.J_hat;
  if (est.status != FitStatus::converged) return out;
  est.cov_hat *= cfg.cov_inflation;
  const Interval wald = ci_wald(est, cfg.link_for_fit, cfg.q, cfg.level);
  out.wald_lower = wald.lower;
  out.wald_upper = wald.upper;
  out.fieller = ci_fieller(est, cfg.link_for_fit, cfg.q, cfg.level);
  out.wald_covers = wald.contains(gamma);
  out.fieller_covers = out.fieller.contains(gamma);
  return out;
}

}  // namespace

McReport run_mc(const McConfig& cfg) {
  validate(cfg.rule);
  if (cfg.n < 2) throw ValidationError("n", "n must be >= 2");
  if (cfg.reps < 1) throw ValidationError("reps", "reps must be >= 1");

  McReport report;
  report.design = std::string(design_name(cfg.rule));
  report.theta0 = cfg.model.theta;
  report.n = cfg.n;
  report.reps = cfg.reps;
  report.q = cfg.q;
  report.level = cfg.level;
  report.gamma_q = quantile_point(cfg.model.theta, cfg.model.link, cfg.q);
  report.replications.resize(cfg.reps);

  // Replication r always uses stream r; results land in slot r, so the
  // report does not depend on scheduling.
  const unsigned threads =
      std::max(1u, std::min<unsigned>(cfg.threads ? cfg.threads : std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(cfg.reps)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.reps; r = next++) report.replications[r] = run_one(cfg, r, report.gamma_q);
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  std::vector<Vec2> kept_estimates;
  std::vector<Vec2> centred;
  const double scale = std::sqrt(static_cast<double>(cfg.n));
  std::size_t wald_hits = 0, fieller_hits = 0;
  double min_ratio = INFINITY;
  std::vector<double> conditions;
  for (const auto& rep : report.replications) {
    ++report.status_counts[static_cast<std::size_t>(rep.status)];
    conditions.push_back(rep.qv_condition);
    if (rep.status != FitStatus::converged) continue;
    kept_estimates.push_back(rep.theta_hat);
    centred.push_back(scale * (rep.theta_hat - cfg.model.theta));
    wald_hits += rep.wald_covers ? 1 : 0;
    fieller_hits += rep.fieller_covers ? 1 : 0;
    if (rep.fieller.kind == FiellerSet::Kind::bounded) {
      const double w = rep.wald_upper - rep.wald_lower;
      if (w > 0.0) min_ratio = std::min(min_ratio, rep.fieller.width() / w);
    } else {
      ++report.fieller_unbounded;
    }
  }
  report.kept = kept_estimates.size();
  report.attrition = 1.0 - static_cast<double>(report.kept) / static_cast<double>(cfg.reps);
  report.unreliable = 2 * report.kept < cfg.reps;
  report.median_qv_condition = median(conditions);
  report.min_fieller_wald_ratio = std::isfinite(min_ratio) ? min_ratio : 0.0;

  if (report.kept > 0) {
    const double k = static_cast<double>(report.kept);
    for (const auto& c : centred) report.mean += c;
    report.mean /= k;
    for (const auto& c : centred) report.covariance += (c - report.mean) * (c - report.mean).transpose();
    if (report.kept > 1) report.covariance /= (k - 1.0);
    report.mean_se = (report.covariance.diagonal() / k).cwiseSqrt();
    report.coverage_wald = static_cast<double>(wald_hits) / k;
    report.coverage_fieller = static_cast<double>(fieller_hits) / k;
  }

  report.reference_J = reference_information(cfg, &report.reference_source);
  if (report.reference_J) {
    const Mat2& J = *report.reference_J;
    const Eigen::LLT<Mat2> llt(J);
    if (llt.info() == Eigen::Success) {
      const Mat2 J_inv = llt.solve(Mat2::Identity());
      report.reference_J_inv = J_inv;
      if (report.kept > 1) {
        report.covariance_rel_error = (report.covariance - J_inv).norm() / J_inv.norm();
        report.ks = normality_stats(kept_estimates, cfg.model.theta, cfg.n, J);
      }
    }
    std::vector<double> distances;
    for (const auto& rep : report.replications) {
      if (rep.status == FitStatus::converged) distances.push_back((rep.J_hat - J).norm());
    }
    if (!distances.empty()) report.median_J_hat_distance = median(std::move(distances));
  }
  return report;
}

CoveragePair coverage(McConfig cfg, double q, double level) {
  cfg.q = q;
  cfg.level = level;
  const auto report = run_mc(cfg);
  return {report.coverage_wald, report.coverage_fieller};
}

}  // namespace sensitest
