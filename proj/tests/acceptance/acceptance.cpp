// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "sensitest/chain.hpp"
#include "sensitest/dqm.hpp"
#include "sensitest/langlie.hpp"
#include "sensitest/mc.hpp"
#include "sensitest/path_io.hpp"
#include "sensitest/serialize.hpp"
#include "sensitest/service.hpp"

#include "httplib.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

using namespace sensitest;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome result;
  try {
    result = body();
  } catch (const std::exception& e) {
    result = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_seconds > 0 && seconds > budget_seconds) {
    result.pass = false;
    result.detail += " [over runtime budget]";
  }
  if (!result.pass) ++failures;
  if (budget_seconds > 0) {
    std::printf("%s  %2d  %-28s %s (%.2fs, budget %.0fs)\n", result.pass ? "PASS" : "FAIL", id, title,
                result.detail.c_str(), seconds, budget_seconds);
  } else {
    std::printf("%s  %2d  %-28s %s (%.2fs)\n", result.pass ? "PASS" : "FAIL", id, title, result.detail.c_str(),
                seconds);
  }
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Draw {
  ModelSpec model;
  double x;
  int y;
};

std::vector<Draw> random_draws(Link link, std::size_t count, std::uint64_t seed) {
  Rng rng({seed, 0});
  std::vector<Draw> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double alpha = -3.0 + 6.0 * rng.uniform();
    const double beta = -3.0 + 6.0 * rng.uniform();
    const double x = -4.0 + 8.0 * rng.uniform();
    out.push_back({{link, Vec2(alpha, beta)}, x, rng.uniform() < 0.5 ? 0 : 1});
  }
  return out;
}

Outcome score_gradient() {
  const double step = 1e-5;
  double worst = 0.0;
  for (Link link : {Link::logit, Link::probit}) {
    for (const auto& d : random_draws(link, 1000, 11)) {
      const Vec2 u = score(d.model, d.x, d.y);
      for (int k = 0; k < 2; ++k) {
        ModelSpec up = d.model, down = d.model;
        up.theta(k) += step;
        down.theta(k) -= step;
        const double fd = (loglik_term(up, d.x, d.y) - loglik_term(down, d.x, d.y)) / (2 * step);
        worst = std::max(worst, std::abs(fd - u(k)));
      }
    }
  }
  return {worst < 1e-6, fmt("max |fd - score| = %.3g (tol 1e-6, 2000 draws)", worst)};
}

Outcome information_identity() {
  double worst = 0.0;
  for (Link link : {Link::logit, Link::probit}) {
    for (const auto& d : random_draws(link, 1000, 11)) {
      Mat2 sum = Mat2::Zero();
      for (int y = 0; y <= 1; ++y) {
        const Vec2 u = score(d.model, d.x, y);
        sum += u * u.transpose() * conditional_density(d.model, d.x, y);
      }
      worst = std::max(worst, (sum - fisher_unit(d.model, d.x)).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-10, fmt("max entry error = %.3g (tol 1e-10)", worst)};
}

const ModelSpec kLogit01{Link::logit, Vec2(0.0, 1.0)};

Outcome sdqm_decay() {
  const auto report = sdqm_trend(Bruceton{0.0, 1.0}, kLogit01, Vec2(1.0, 1.0), {100, 1000, 10000}, 50, {301, 0});
  const double ratio = report.sums.back() / report.sums.front();
  return {ratio <= 0.05, fmt("median sum n=1e2: %.4g, n=1e4: %.4g, ratio %.4f (tol 0.05)", report.sums.front(),
                             report.sums.back(), ratio)};
}

Outcome lan_remainder_decay() {
  const auto trend = lan_trend(Bruceton{0.0, 1.0}, kLogit01, Vec2(1.0, 1.0), {200, 2000}, 500, {401, 0});
  const double ratio = trend.median_abs_remainder[1] / trend.median_abs_remainder[0];
  return {ratio < 0.5, fmt("median |R| n=200: %.4g, n=2000: %.4g, ratio %.3f (tol 0.5)",
                           trend.median_abs_remainder[0], trend.median_abs_remainder[1], ratio)};
}

Outcome stationary_chain() {
  const auto report = analyze_chain(kLogit01, 1.0, 0.0, 30);
  const auto& pi = report.stationary.pi;
  double asym = 0.0;
  for (int k = 1; k <= 30; ++k) {
    asym = std::max(asym, std::abs(pi(report.chain.index_of(k)) - pi(report.chain.index_of(-k))));
  }
  const auto reverse = foster_check(kLogit01, 1.0, 200, StepDirection::reverse);
  const bool pass = report.stationary.residual < 1e-10 && asym < 1e-10 && report.drift.pass &&
                    report.drift.epsilon >= 0.5 && !reverse.pass;
  std::ostringstream s;
  s << "residual " << report.stationary.residual << ", asymmetry " << asym << ", foster n0=" << report.drift.n0
    << " eps=" << report.drift.epsilon << ", reverse " << (reverse.pass ? "PASS" : "FAIL");
  return {pass, s.str()};
}

McReport bruceton_mc() {
  McConfig cfg;
  cfg.rule = Bruceton{0.0, 0.5};
  cfg.model = kLogit01;
  cfg.n = 500;
  cfg.reps = 2000;
  cfg.master_seed = 601;
  cfg.q = 0.5;
  cfg.level = 0.95;
  return run_mc(cfg);
}

Outcome theorem_covariance(const McReport& r) {
  if (!r.covariance_rel_error || !r.ks) return {false, "no reference information"};
  const bool pass = *r.covariance_rel_error < 0.15 && (*r.ks)[0] < 0.05 && (*r.ks)[1] < 0.05;
  return {pass, fmt("kept %.0f/2000, cov rel err %.4f (tol 0.15), KS %.4f / %.4f (tol 0.05)",
                    static_cast<double>(r.kept), *r.covariance_rel_error, (*r.ks)[0], (*r.ks)[1])};
}

Outcome interval_coverage(const McReport& r) {
  const bool pass = r.coverage_wald >= 0.93 && r.coverage_wald <= 0.97 && r.coverage_fieller >= 0.93 &&
                    r.coverage_fieller <= 0.97 && r.min_fieller_wald_ratio >= 0.8;
  return {pass, fmt("Wald %.4f, Fieller %.4f (band [0.93,0.97]), min Fieller/Wald width %.4f (tol 0.8)",
                    r.coverage_wald, r.coverage_fieller, r.min_fieller_wald_ratio)};
}

double condition_number(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(m);
  return es.eigenvalues()(1) / es.eigenvalues()(0);
}

Outcome robbins_monro() {
  const RobbinsMonro rule{0.0, 4.0, 0.5};
  std::vector<double> final_error, cond200, cond5000;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto path = simulate_path(rule, kLogit01, 5000, {801, r});
    final_error.push_back(std::abs(next_level(path)));
    const auto sp = score_process(path.trials, kLogit01.theta, Link::logit);
    cond200.push_back(condition_number(sp.qv[200]));
    cond5000.push_back(condition_number(sp.qv[5000]));
  }
  const double err = median(final_error), c200 = median(cond200), c5000 = median(cond5000);
  return {err < 0.1 && c5000 > 10 * c200,
          fmt("median |X_5001| %.4f (tol 0.1), median cond <U,U> n=200: %.1f, n=5000: %.1f (ratio %.1f, tol 10)",
              err, c200, c5000, c5000 / c200)};
}

Outcome langlie() {
  std::ostringstream s;
  bool pass = true;

  const auto i2 = interval_union(2, 0.1);
  const bool union_ok = i2.intervals.size() == 2 && i2.intervals[0].lower == 0.25 && i2.intervals[0].upper == 0.35 &&
                        i2.intervals[1].lower == 0.65 && i2.intervals[1].upper == 0.75;
  pass &= union_ok;
  s << "I_2 " << (union_ok ? "exact" : "MISMATCH");

  const int first_single = first_single_generation(0.1);
  const int bound = overlap_bound_generation(0.1);
  pass &= first_single <= 5 && bound == 5;
  s << ", first single generation " << first_single << " (bound " << bound << ")";

  const LanglieKernel unit{0.1, {Link::probit, Vec2(0.0, 1.0)}, 1000};
  const auto drift = drift_check(unit, 10.0);
  pass &= std::abs(drift.drift_at_one - (-2.865)) <= 1e-3;
  s << ", drift(1) " << drift.drift_at_one;

  // Median 0 sits inside (a, b); normalized eps is 0.1.
  const MarkovLanglie rule{-1.0, 1.0, 0.2};
  const ModelSpec model{Link::probit, Vec2(0.0, 1.0)};
  const LanglieKernel kernel = normalized_kernel(rule, model, 1000);
  const auto measure = invariant_measure(kernel);
  const auto path = simulate_path(rule, model, 1'000'000, {901, 0});
  std::vector<double> levels;
  levels.reserve(path.size());
  for (const auto& t : path.trials) levels.push_back(to_unit(rule, t.x));
  const double tv = total_variation(measure.mass, occupation_histogram(levels, 1000));
  pass &= measure.accepted && tv < 0.02;
  s << ", invariant residual " << measure.residual << ", TV vs 1e6-step histogram " << tv << " (tol 0.02)";
  return {pass, s.str()};
}

Outcome service_replay() {
  const auto dir = std::filesystem::temp_directory_path() / ("sensitest_accept_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  SessionStore store(dir);
  httplib::Server server;
  register_routes(server, store);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  std::ostringstream s;
  bool pass = true;
  auto run_session = [&](const json& create, std::uint64_t seed) {
    auto res = client.Post("/sessions", create.dump(), "application/json");
    if (!res || res->status != 201) throw std::runtime_error("create failed");
    const json session = json::parse(res->body);
    const std::string id = session["id"];
    double level = session["next_level"];
    Rng rng({seed, 0});
    for (std::size_t k = 1; k <= 200; ++k) {
      const int y = rng.uniform() < link_eval(Link::logit, level).H ? 1 : 0;
      const json body{{"y", y}, {"trial_index", k}};
      res = client.Post("/sessions/" + id + "/outcomes", body.dump(), "application/json");
      if (!res || res->status != 200) throw std::runtime_error("outcome failed");
      level = json::parse(res->body)["next_level"];
    }
    res = client.Get("/sessions/" + id + "/estimate?q=0.5&level=0.95");
    const json estimate = json::parse(res->body);
    res = client.Get("/sessions/" + id + "/export");
    std::istringstream csv(res->body);
    const ExperimentPath path = read_path_csv(csv);
    const EstimateResult offline = fit_mle(path, Link::logit);
    bool same = estimate["estimable"] == true;
    if (same) {
      const Vec2 served = vec2_from_json(estimate["estimate"]["theta_hat"]);
      same = std::memcmp(served.data(), offline.theta_hat.data(), sizeof(double) * 2) == 0;
    }
    const bool replay = path.size() == 200 && replays_exactly(path) && next_level(path) == level;
    s << design_name(path.rule) << ": refit " << (same ? "bit-identical" : "DIFFERS") << ", replay "
      << (replay ? "exact" : "MISMATCH") << "; ";
    pass &= same && replay;
  };
  try {
    run_session({{"design", "bruceton"}, {"x1", 0.0}, {"d", 0.5}, {"link", "logit"}}, 1001);
    run_session({{"design", "langlie"}, {"a", -2.0}, {"b", 2.0}, {"eps", 0.2}, {"link", "logit"}}, 1002);
  } catch (...) {
    server.stop();
    worker.join();
    std::filesystem::remove_all(dir);
    throw;
  }
  server.stop();
  worker.join();
  std::filesystem::remove_all(dir);
  return {pass, s.str()};
}

}  // namespace

int main() {
  criterion(1, "score/gradient agreement", 1, score_gradient);
  criterion(2, "information identity", 1, information_identity);
  criterion(3, "S-DQM decay", 60, sdqm_decay);
  criterion(4, "LAN remainder", 120, lan_remainder_decay);
  criterion(5, "stationary distribution", 10, stationary_chain);
  McReport mc;
  const auto start = std::chrono::steady_clock::now();
  criterion(6, "covariance and normality", 600, [&] {
    mc = bruceton_mc();
    return theorem_covariance(mc);
  });
  const double mc_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  criterion(7, "interval coverage", std::max(0.0, 600 - mc_seconds), [&] { return interval_coverage(mc); });
  criterion(8, "Robbins-Monro", 120, robbins_monro);
  criterion(9, "Langlie kernel", 180, langlie);
  criterion(10, "service replay", 0, service_replay);
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
