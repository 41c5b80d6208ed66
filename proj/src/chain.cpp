#include "sensitest/chain.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace sensitest {

LatticeChain build_transition(const ModelSpec& model, double step, double x1, int K, StepDirection direction) {
  if (!(model.beta() > 0.0)) throw DomainError("build_transition: slope beta must be > 0");
  if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("build_transition: step must be > 0");
  if (!std::isfinite(x1)) throw DomainError("build_transition: x1 must be finite");
  if (K < 2) throw DomainError("build_transition: truncation K must be >= 2");

  LatticeChain chain{model, step, x1, K, direction, {}, {}};
  const auto size = static_cast<Eigen::Index>(2 * K + 1);
  chain.grid.reserve(static_cast<std::size_t>(size));
  for (int k = -K; k <= K; ++k) chain.grid.push_back(x1 + k * step);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * size));
  for (Eigen::Index i = 0; i < size; ++i) {
    // H and 1 - H are evaluated separately so small tail moves keep full precision.
    const auto ev = link_eval(model.link, model.eta(chain.grid[static_cast<std::size_t>(i)]));
    const bool standard = direction == StepDirection::standard;
    const double down = standard ? ev.H : ev.H_c;
    const double up = standard ? ev.H_c : ev.H;
    triplets.emplace_back(i, i == 0 ? i : i - 1, down);
    triplets.emplace_back(i, i == size - 1 ? i : i + 1, up);
  }
  chain.P.resize(size, size);
  chain.P.setFromTriplets(triplets.begin(), triplets.end());
  chain.P.makeCompressed();
  return chain;
}

ChainStationary stationary(const LatticeChain& chain) {
  const auto solution = solve_stationary(chain.P);
  ChainStationary out{solution.pi, solution.residual, 0};

  SparseMatrix interior = chain.P;
  for (Eigen::Index r = 0; r < interior.rows(); ++r) {
    for (SparseMatrix::InnerIterator it(interior, r); it; ++it) {
      if (it.col() == r) it.valueRef() = 0.0;
    }
  }
  interior.prune(0.0);
  out.period = chain_period(interior);
  return out;
}

LimitingInformation limiting_information(const ModelSpec& model, const std::vector<double>& grid,
                                         const Eigen::VectorXd& pi) {
  if (static_cast<Eigen::Index>(grid.size()) != pi.size()) throw DomainError("limiting_information: size mismatch");
  LimitingInformation out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double mass = pi(static_cast<Eigen::Index>(i));
    if (mass < 0.0) throw DomainError("limiting_information: negative probability mass");
    if (mass > 1e-12) ++out.support;
    if (mass > 0.0) out.J += mass * fisher_unit(model, grid[i]);
  }
  out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Mat2>(out.J, Eigen::EigenvaluesOnly).eigenvalues()(0);
  out.invertible = out.support >= 2 && out.min_eigenvalue > 0.0;
  return out;
}

LimitingInformation limiting_information(const LatticeChain& chain, const Eigen::VectorXd& pi) {
  return limiting_information(chain.model, chain.grid, pi);
}

FosterReport foster_check(const ModelSpec& model, double step, int x_max, StepDirection direction,
                          const FosterOptions& options) {
  if (!(step > 0.0)) throw DomainError("foster_check: step must be > 0");
  if (x_max < 4) throw DomainError("foster_check: x_max must be >= 4");
  FosterReport report;
  report.x_max = x_max;

  auto move_down = [&](int k) {
    const auto ev = link_eval(model.link, model.eta(k * step));
    return direction == StepDirection::standard ? ev.H : ev.H_c;
  };
  auto move_up = [&](int k) {
    const auto ev = link_eval(model.link, model.eta(k * step));
    return direction == StepDirection::standard ? ev.H_c : ev.H;
  };

  std::vector<double> margin(static_cast<std::size_t>(x_max + 1), -INFINITY);  // worst drift at radius |k|
  for (int k = -x_max; k <= x_max; ++k) {
    const double expected = move_down(k) * std::abs(k - 1) + move_up(k) * std::abs(k + 1);
    const double drift = expected - std::abs(k);
    report.states.push_back(k);
    report.drift.push_back(drift);
    auto& worst = margin[static_cast<std::size_t>(std::abs(k))];
    worst = std::max(worst, drift);
  }
  for (int k = 0; k <= x_max; ++k) {
    report.tail_up.push_back(move_up(k) * (k + 1));
    report.tail_down.push_back(move_down(-k) * (k + 1));
  }

  // suffix_max[r] = max drift over r <= |k| <= x_max.
  std::vector<double> suffix_max(static_cast<std::size_t>(x_max + 2), -INFINITY);
  for (int r = x_max; r >= 0; --r) {
    suffix_max[static_cast<std::size_t>(r)] =
        std::max(suffix_max[static_cast<std::size_t>(r + 1)], margin[static_cast<std::size_t>(r)]);
  }
  // Require the set outside F to span at least half the scanned range so a
  // handful of edge states cannot pass on their own.
  const int n0_limit = x_max / 2;
  int first_negative = -1;
  int first_margin = -1;
  for (int n0 = 0; n0 <= n0_limit; ++n0) {
    const double worst = suffix_max[static_cast<std::size_t>(n0 + 1)];
    if (worst < 0.0 && first_negative < 0) first_negative = n0;
    if (worst <= -options.min_margin) {
      first_margin = n0;
      break;
    }
  }
  const int n0 = first_margin >= 0 ? first_margin : first_negative;
  if (n0 < 0) {
    report.pass = false;
    report.message = "no finite set F outside which the drift of V(x) = |x| is negative";
    return report;
  }
  report.pass = true;
  report.n0 = n0;
  report.epsilon = -suffix_max[static_cast<std::size_t>(n0 + 1)];
  report.finite_on_F = true;
  for (int k = -n0; k <= n0; ++k) {
    const double expected = move_down(k) * std::abs(k - 1) + move_up(k) * std::abs(k + 1);
    report.finite_on_F = report.finite_on_F && std::isfinite(expected);
  }
  report.message = first_margin >= 0 ? "drift margin reached" : "negative drift below the requested margin";
  return report;
}

ChainReport analyze_chain(const ModelSpec& model, double step, double x1, int K, int x_max, StepDirection direction) {
  ChainReport report{build_transition(model, step, x1, K, direction), {}, {}, {}};
  report.stationary = stationary(report.chain);
  report.information = limiting_information(report.chain, report.stationary.pi);
  report.drift = foster_check(model, step, x_max, direction);
  return report;
}

}  // namespace sensitest
