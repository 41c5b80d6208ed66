#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sensitest {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

using Vec2 = Vector2<double>;
using Mat2 = Matrix2<double>;

/// Raised for non-finite or out-of-range numeric arguments.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Raised when a linear system or ratio has no unique solution.
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Link { logit, probit };

std::string_view to_string(Link link);
/// Accepts "logit" or "probit".
Link parse_link(std::string_view name);

/// Linear predictors are clamped to [-bound, bound] before evaluation. The
/// probit bound keeps both tails representable (Phi(-38) ~ 2.9e-316); the
/// logit bound sits below the point where exp(-eta) underflows.
template <typename Scalar>
constexpr Scalar eta_clamp(Link link) {
  return link == Link::probit ? Scalar(38) : Scalar(700);
}

/// Binary regression model P(Y = 1 | x) = H(alpha + beta * x).
template <typename Scalar>
struct BasicModel {
  Link link = Link::logit;
  Vector2<Scalar> theta = Vector2<Scalar>::Zero();

  Scalar alpha() const { return theta(0); }
  Scalar beta() const { return theta(1); }
  Scalar eta(Scalar x) const { return theta(0) + theta(1) * x; }

  template <typename Other>
  BasicModel<Other> cast() const {
    return {link, theta.template cast<Other>()};
  }
};

using ModelSpec = BasicModel<double>;

/// Link function values at one linear predictor. Logs are carried alongside
/// the raw values so that tail computations never divide underflowed numbers.
template <typename Scalar>
struct LinkEval {
  Scalar eta;         // clamped linear predictor
  Scalar H;           // H(eta)
  Scalar H_c;         // 1 - H(eta), computed directly
  Scalar Hprime;      // H'(eta)
  Scalar log_H;
  Scalar log_H_c;
  Scalar log_Hprime;
};

namespace detail {

/// log Phi(-t) for t >= 37 via the Mills-ratio asymptotic series.
template <typename Scalar>
Scalar log_normal_upper_tail_asymptotic(Scalar t) {
  using std::log;
  const Scalar inv_t2 = Scalar(1) / (t * t);
  Scalar term = Scalar(1);
  Scalar sum = Scalar(1);
  for (int k = 1; k <= 12; ++k) {
    term *= -Scalar(2 * k - 1) * inv_t2;
    sum += term;
  }
  return -t * t / 2 - log(t) - log(std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>)) + log(sum);
}

/// log Phi(-t) for t >= 0.
template <typename Scalar>
Scalar log_normal_upper_tail(Scalar t) {
  using std::erfc;
  using std::log;
  if (t < Scalar(37)) return log(erfc(t / std::numbers::sqrt2_v<Scalar>) / 2);
  return log_normal_upper_tail_asymptotic(t);
}

}  // namespace detail

template <typename Scalar>
LinkEval<Scalar> link_eval(Link link, Scalar eta) {
  using std::exp;
  using std::log;
  using std::log1p;
  if (!std::isfinite(static_cast<double>(eta))) throw DomainError("link_eval: non-finite linear predictor");
  const Scalar bound = eta_clamp<Scalar>(link);
  if (eta > bound) eta = bound;
  if (eta < -bound) eta = -bound;

  LinkEval<Scalar> out{};
  out.eta = eta;
  if (link == Link::logit) {
    // exp(-|eta|) never overflows; each side is assembled from it.
    const Scalar e = exp(-std::abs(eta));
    const Scalar near = Scalar(1) / (Scalar(1) + e);  // H(|eta|)
    const Scalar far = e / (Scalar(1) + e);           // 1 - H(|eta|)
    const Scalar log_near = -log1p(e);
    const Scalar log_far = -std::abs(eta) - log1p(e);
    if (eta >= 0) {
      out.H = near, out.H_c = far, out.log_H = log_near, out.log_H_c = log_far;
    } else {
      out.H = far, out.H_c = near, out.log_H = log_far, out.log_H_c = log_near;
    }
    out.Hprime = out.H * out.H_c;
    out.log_Hprime = out.log_H + out.log_H_c;
  } else {
    using std::erfc;
    const Scalar rt2 = std::numbers::sqrt2_v<Scalar>;
    out.H = erfc(-eta / rt2) / 2;
    out.H_c = erfc(eta / rt2) / 2;
    if (eta >= 0) {
      out.log_H_c = detail::log_normal_upper_tail(eta);
      out.log_H = log1p(-out.H_c);
    } else {
      out.log_H = detail::log_normal_upper_tail(-eta);
      out.log_H_c = log1p(-out.H);
    }
    out.log_Hprime = -eta * eta / 2 - log(std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>));
    out.Hprime = exp(out.log_Hprime);
  }
  return out;
}

/// f_theta(y | x): H for y = 1, 1 - H for y = 0.
template <typename Scalar>
Scalar conditional_density(const BasicModel<Scalar>& model, Scalar x, int y) {
  const auto ev = link_eval(model.link, model.eta(x));
  return y == 1 ? ev.H : ev.H_c;
}

/// d/d eta of log f(y | eta). For logit this is exactly y - H.
template <typename Scalar>
Scalar score_factor(Link link, const LinkEval<Scalar>& ev, int y) {
  using std::exp;
  if (link == Link::logit) return y == 1 ? ev.H_c : -ev.H;
  return y == 1 ? exp(ev.log_Hprime - ev.log_H) : -exp(ev.log_Hprime - ev.log_H_c);
}

inline void check_outcome(int y) {
  if (y != 0 && y != 1) throw DomainError("outcome must be 0 or 1");
}

/// Conditional score u_theta(y | x) = z (y - H) H' / (H (1 - H)), z = (1, x).
template <typename Scalar>
Vector2<Scalar> score(const BasicModel<Scalar>& model, Scalar x, int y) {
  check_outcome(y);
  if (!std::isfinite(static_cast<double>(x))) throw DomainError("score: non-finite stimulus");
  const auto ev = link_eval(model.link, model.eta(x));
  const Scalar s = score_factor(model.link, ev, y);
  return Vector2<Scalar>(s, s * x);
}

/// Scalar weight H'^2 / (H (1 - H)) of the per-point information.
template <typename Scalar>
Scalar information_weight(Link link, const LinkEval<Scalar>& ev) {
  using std::exp;
  if (link == Link::logit) return ev.H * ev.H_c;
  return exp(Scalar(2) * ev.log_Hprime - ev.log_H - ev.log_H_c);
}

/// Per-covariate Fisher information J_theta(x) = z z^T H'^2 / (H (1 - H)).
template <typename Scalar>
Matrix2<Scalar> fisher_unit(const BasicModel<Scalar>& model, Scalar x) {
  if (!std::isfinite(static_cast<double>(x))) throw DomainError("fisher_unit: non-finite stimulus");
  const Scalar w = information_weight(model.link, link_eval(model.link, model.eta(x)));
  Matrix2<Scalar> J;
  J << w, w * x, w * x, w * x * x;
  return J;
}

/// y log H + (1 - y) log(1 - H).
template <typename Scalar>
Scalar loglik_term(const BasicModel<Scalar>& model, Scalar x, int y) {
  check_outcome(y);
  const auto ev = link_eval(model.link, model.eta(x));
  return y == 1 ? ev.log_H : ev.log_H_c;
}

/// Second derivative in eta of log f(y | eta); nonpositive for both links.
template <typename Scalar>
Scalar loglik_curvature(Link link, const LinkEval<Scalar>& ev, int y) {
  if (link == Link::logit) return -ev.H * ev.H_c;
  // With s the signed inverse Mills ratio (the score factor), both outcomes
  // give d2/deta2 log f = -s (s + eta).
  const Scalar s = score_factor(link, ev, y);
  return -s * (s + ev.eta);
}

/// Standard normal quantile, accurate to a few ulps on (0, 1).
double normal_quantile(double p);

/// H^{-1}(q).
double inverse_link(Link link, double q);

/// Suprema of the three bounded functionals of the link that control the
/// fourth score moment, the conditional score covariance, and the plug-in
/// information.
struct ScoreBoundProfile {
  Link link;
  double grid_min;
  double grid_max;
  double grid_step;
  double sup_fourth_moment;   // a^4 H'^4 / (H (1 - H))^3
  double sup_second_moment;   // a^2 H'^2 / (H (1 - H))
  double sup_information;     // H'^2 / (H (1 - H))
  double argmax_fourth_moment;
  double argmax_second_moment;
  double argmax_information;
  bool all_finite;
};

ScoreBoundProfile score_bound_profile(Link link, double grid_min = -40.0, double grid_max = 40.0,
                                      double grid_step = 1e-3);

}  // namespace sensitest
