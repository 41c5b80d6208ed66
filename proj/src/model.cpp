#include "sensitest/model.hpp"

#include <array>
#include <limits>

namespace sensitest {

std::string_view to_string(Link link) { return link == Link::logit ? "logit" : "probit"; }

Link parse_link(std::string_view name) {
  if (name == "logit") return Link::logit;
  if (name == "probit") return Link::probit;
  throw DomainError("unknown link '" + std::string(name) + "' (expected logit or probit)");
}

namespace {

// Acklam's rational approximation; relative error about 1e-9 before refinement.
double acklam(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - p_low) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: probability must lie in (0, 1)");
  double x = acklam(p);
  // Halley steps against the erfc-based CDF.
  for (int k = 0; k < 2; ++k) {
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
    x -= u / (1 + x * u / 2);
  }
  return x;
}

double inverse_link(Link link, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("inverse_link: probability must lie in (0, 1)");
  if (link == Link::logit) return std::log(q) - std::log1p(-q);
  return normal_quantile(q);
}

ScoreBoundProfile score_bound_profile(Link link, double grid_min, double grid_max, double grid_step) {
  if (!(grid_step > 0) || !(grid_max > grid_min)) throw DomainError("score_bound_profile: bad grid");
  ScoreBoundProfile out{link, grid_min, grid_max, grid_step, 0, 0, 0, 0, 0, 0, true};
  const auto steps = static_cast<long>(std::floor((grid_max - grid_min) / grid_step + 0.5));
  for (long k = 0; k <= steps; ++k) {
    const double a = grid_min + static_cast<double>(k) * grid_step;
    const auto ev = link_eval(link, a);
    const double log_var = ev.log_H + ev.log_H_c;
    const double info = std::exp(2 * ev.log_Hprime - log_var);
    // Polynomial factors use the clamped predictor so both halves of each
    // ratio refer to the same point.
    const double log_abs_a = std::log(std::abs(ev.eta));
    const double second = ev.eta == 0.0 ? 0.0 : std::exp(2 * log_abs_a + 2 * ev.log_Hprime - log_var);
    const double fourth = ev.eta == 0.0 ? 0.0 : std::exp(4 * log_abs_a + 4 * ev.log_Hprime - 3 * log_var);
    if (!std::isfinite(info) || !std::isfinite(second) || !std::isfinite(fourth)) out.all_finite = false;
    if (info > out.sup_information) out.sup_information = info, out.argmax_information = a;
    if (second > out.sup_second_moment) out.sup_second_moment = second, out.argmax_second_moment = a;
    if (fourth > out.sup_fourth_moment) out.sup_fourth_moment = fourth, out.argmax_fourth_moment = a;
  }
  return out;
}

}  // namespace sensitest
