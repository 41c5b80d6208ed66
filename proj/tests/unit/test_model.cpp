#include "sensitest/model.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>

using namespace sensitest;

TEST(LinkEval, LogitAtZero) {
  const auto ev = link_eval(Link::logit, 0.0);
  EXPECT_DOUBLE_EQ(ev.H, 0.5);
  EXPECT_DOUBLE_EQ(ev.Hprime, 0.25);
}

TEST(LinkEval, ProbitAtZero) {
  const auto ev = link_eval(Link::probit, 0.0);
  EXPECT_DOUBLE_EQ(ev.H, 0.5);
  EXPECT_NEAR(ev.Hprime, 0.3989422804014327, 1e-15);
}

TEST(LinkEval, LogitAtOneMatchesQuadOracle) {
  const auto ev = link_eval(Link::logit, 1.0);
  const double H = oracle::logistic(1.0);
  EXPECT_NEAR(ev.H, H, 1e-15);
  EXPECT_NEAR(ev.Hprime, oracle::logistic(1.0) * oracle::logistic(-1.0), 1e-15);
  EXPECT_NEAR(ev.H, 0.7310585786, 1e-10);
  EXPECT_NEAR(ev.Hprime, 0.1966119332, 1e-10);
}

TEST(LinkEval, ProbitMatchesQuadOracleAcrossRange) {
  for (double eta = -37.5; eta <= 37.5; eta += 0.37) {
    const auto ev = link_eval(Link::probit, eta);
    const double H = oracle::normal_cdf(eta), Hc = oracle::normal_cdf(-eta);
    EXPECT_NEAR(ev.H / H, 1.0, 1e-12) << eta;
    EXPECT_NEAR(ev.H_c / Hc, 1.0, 1e-12) << eta;
    EXPECT_NEAR(ev.log_H, oracle::log_normal_cdf(eta), 1e-12 * std::max(1.0, std::abs(ev.log_H))) << eta;
    EXPECT_NEAR(ev.log_H_c, oracle::log_normal_cdf(-eta), 1e-12 * std::max(1.0, std::abs(ev.log_H_c))) << eta;
  }
}

TEST(LinkEval, ComplementsSumToOne) {
  for (Link link : {Link::logit, Link::probit}) {
    for (double eta = -8; eta <= 8; eta += 0.25) {
      const auto ev = link_eval(link, eta);
      EXPECT_NEAR(ev.H + ev.H_c, 1.0, 1e-15);
      EXPECT_GE(ev.H, 0.0);
      EXPECT_LE(ev.H, 1.0);
    }
  }
}

TEST(LinkEval, NonFiniteThrows) {
  EXPECT_THROW(link_eval(Link::logit, double(NAN)), DomainError);
  EXPECT_THROW(link_eval(Link::probit, double(INFINITY)), DomainError);
}

TEST(LinkEval, ExtremePredictorsStayFinite) {
  for (Link link : {Link::logit, Link::probit}) {
    for (double eta : {-1e6, -800.0, -45.0, 45.0, 800.0, 1e6}) {
      const auto ev = link_eval(link, eta);
      EXPECT_TRUE(std::isfinite(ev.log_H));
      EXPECT_TRUE(std::isfinite(ev.log_H_c));
      EXPECT_TRUE(std::isfinite(information_weight(link, ev)));
      EXPECT_TRUE(std::isfinite(score_factor(link, ev, 0)));
      EXPECT_TRUE(std::isfinite(score_factor(link, ev, 1)));
    }
  }
}

TEST(Score, Examples) {
  const ModelSpec flat{Link::logit, Vec2(0, 0)};
  const Vec2 u1 = score(flat, 2.0, 1);
  EXPECT_DOUBLE_EQ(u1(0), 0.5);
  EXPECT_DOUBLE_EQ(u1(1), 1.0);

  const Vec2 u2 = score(ModelSpec{Link::logit, Vec2(0, 1)}, 1.0, 0);
  EXPECT_NEAR(u2(0), -oracle::logistic(1.0), 1e-15);
  EXPECT_NEAR(u2(1), -0.7310586, 1e-7);

  const Vec2 u3 = score(ModelSpec{Link::probit, Vec2(0, 1)}, 0.0, 1);
  EXPECT_NEAR(u3(0), 2 * oracle::normal_pdf(0.0), 1e-15);
  EXPECT_NEAR(u3(0), 0.7978846, 1e-7);
  EXPECT_DOUBLE_EQ(u3(1), 0.0);
}

TEST(Score, RejectsBadInputs) {
  const ModelSpec m{Link::logit, Vec2(0, 1)};
  EXPECT_THROW(score(m, 0.0, 2), DomainError);
  EXPECT_THROW(score(m, double(NAN), 1), DomainError);
}

TEST(Score, ConditionalMeanIsZero) {
  for (Link link : {Link::logit, Link::probit}) {
    for (double x = -6; x <= 6; x += 0.5) {
      const ModelSpec m{link, Vec2(0.3, 1.7)};
      const Vec2 mean = score(m, x, 1) * conditional_density(m, x, 1) + score(m, x, 0) * conditional_density(m, x, 0);
      EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(FisherUnit, Examples) {
  const Mat2 J = fisher_unit(ModelSpec{Link::logit, Vec2(0, 0)}, 3.0);
  EXPECT_DOUBLE_EQ(J(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(J(0, 1), 0.75);
  EXPECT_DOUBLE_EQ(J(1, 0), 0.75);
  EXPECT_DOUBLE_EQ(J(1, 1), 2.25);

  const Mat2 Jp = fisher_unit(ModelSpec{Link::probit, Vec2(0, 1)}, 0.0);
  EXPECT_NEAR(Jp(0, 0), 2.0 / M_PI, 1e-15);
  EXPECT_NEAR(Jp(0, 0), 0.6366198, 1e-7);
  EXPECT_EQ(Jp(1, 1), 0.0);
}

TEST(FisherUnit, TailDecay) {
  const ModelSpec m{Link::logit, Vec2(0, 1)};
  double previous = INFINITY;
  for (double x : {10.0, 20.0, 40.0, 80.0}) {
    const double norm = fisher_unit(m, x).norm();
    EXPECT_LT(norm, previous);
    previous = norm;
  }
  EXPECT_LT(previous, 1e-30);
}

TEST(FisherUnit, SymmetricPositiveSemidefinite) {
  for (Link link : {Link::logit, Link::probit}) {
    for (double x = -5; x <= 5; x += 0.7) {
      const Mat2 J = fisher_unit(ModelSpec{link, Vec2(-0.4, 2.1)}, x);
      EXPECT_EQ(J(0, 1), J(1, 0));
      EXPECT_GE(J(0, 0), 0.0);
      EXPECT_GE(J.determinant(), -1e-15);
    }
  }
}

TEST(LoglikTerm, Examples) {
  EXPECT_NEAR(loglik_term(ModelSpec{Link::logit, Vec2(0, 0)}, 7.0, 1), std::log(0.5), 1e-15);
  EXPECT_NEAR(loglik_term(ModelSpec{Link::probit, Vec2(0, 1)}, 0.0, 0), std::log(0.5), 1e-15);
  EXPECT_NEAR(loglik_term(ModelSpec{Link::logit, Vec2(0, 1)}, 1.0, 1), std::log(oracle::logistic(1.0)), 1e-15);
  EXPECT_NEAR(loglik_term(ModelSpec{Link::logit, Vec2(0, 1)}, 1.0, 1), -0.3132617, 1e-7);
}

TEST(LoglikTerm, IsConcaveInPredictor) {
  for (Link link : {Link::logit, Link::probit}) {
    for (double eta = -30; eta <= 30; eta += 0.5) {
      const auto ev = link_eval(link, eta);
      EXPECT_LE(loglik_curvature(link, ev, 0), 0.0);
      EXPECT_LE(loglik_curvature(link, ev, 1), 0.0);
    }
  }
}

TEST(LoglikTerm, CurvatureMatchesFiniteDifferenceOfScore) {
  const double h = 1e-5;
  for (Link link : {Link::logit, Link::probit}) {
    for (double eta = -6; eta <= 6; eta += 0.3) {
      for (int y = 0; y <= 1; ++y) {
        const double fd =
            (score_factor(link, link_eval(link, eta + h), y) - score_factor(link, link_eval(link, eta - h), y)) /
            (2 * h);
        EXPECT_NEAR(loglik_curvature(link, link_eval(link, eta), y), fd, 1e-7);
      }
    }
  }
}

TEST(NormalQuantile, InvertsTheCdf) {
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.025, 0.3, 0.5, 0.7, 0.975, 0.999, 1 - 1e-12}) {
    const double z = normal_quantile(p);
    EXPECT_NEAR(oracle::normal_cdf(z) / p, 1.0, 1e-12) << p;
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
}

TEST(InverseLink, Examples) {
  EXPECT_NEAR(inverse_link(Link::logit, 0.9), std::log(9.0), 1e-15);
  EXPECT_DOUBLE_EQ(inverse_link(Link::logit, 0.5), 0.0);
  EXPECT_NEAR(inverse_link(Link::probit, 0.5), 0.0, 1e-16);
}

TEST(ScoreBoundProfile, FiniteForBothLinks) {
  for (Link link : {Link::logit, Link::probit}) {
    const auto p = score_bound_profile(link);
    EXPECT_TRUE(p.all_finite);
    EXPECT_TRUE(std::isfinite(p.sup_fourth_moment));
    EXPECT_TRUE(std::isfinite(p.sup_second_moment));
    EXPECT_TRUE(std::isfinite(p.sup_information));
  }
  const auto logit = score_bound_profile(Link::logit);
  EXPECT_DOUBLE_EQ(logit.sup_information, 0.25);
  EXPECT_DOUBLE_EQ(logit.argmax_information, 0.0);
}

TEST(Model, ScalarTemplateAgreesWithDouble) {
  const BasicModel<long double> m{Link::probit, Vector2<long double>(0.2L, 1.3L)};
  const ModelSpec md = m.cast<double>();
  for (double x = -3; x <= 3; x += 0.5) {
    const auto Jl = fisher_unit(m, static_cast<long double>(x));
    const Mat2 Jd = fisher_unit(md, x);
    EXPECT_LT((Jl.cast<double>() - Jd).cwiseAbs().maxCoeff(), 1e-14);
  }
}
