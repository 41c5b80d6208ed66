#pragma once

#include "sensitest/markov.hpp"
#include "sensitest/model.hpp"

#include <vector>

namespace sensitest {

/// Which way the walk moves after a response.
enum class StepDirection {
  standard,  // down after a response (Bruceton)
  reverse,   // up after a response (reverse Bruceton)
};

/// Up-and-down walk on the lattice x1 + d * {-K..K}. Mass that would leave
/// the lattice stays put (reflecting truncation), so rows remain stochastic.
struct LatticeChain {
  ModelSpec model;
  double step = 1.0;
  double x1 = 0.0;
  int K = 0;
  StepDirection direction = StepDirection::standard;
  std::vector<double> grid;  // ascending, 2K + 1 points
  SparseMatrix P;

  std::size_t states() const { return grid.size(); }
  /// Index of x1 + k d.
  std::size_t index_of(int k) const { return static_cast<std::size_t>(k + K); }
};

LatticeChain build_transition(const ModelSpec& model, double step, double x1, int K,
                              StepDirection direction = StepDirection::standard);

struct ChainStationary {
  Eigen::VectorXd pi;
  double residual = 0.0;
  /// Period of the untruncated walk, read off the interior transitions
  /// (boundary self-loops excluded). The up-and-down walk gives 2.
  int period = 0;
};

ChainStationary stationary(const LatticeChain& chain);

struct LimitingInformation {
  Mat2 J = Mat2::Zero();
  double min_eigenvalue = 0.0;
  std::size_t support = 0;  // states with mass > 1e-12
  bool invertible = false;
};

/// J = sum_x pi(x) J_theta(x).
LimitingInformation limiting_information(const LatticeChain& chain, const Eigen::VectorXd& pi);
LimitingInformation limiting_information(const ModelSpec& model, const std::vector<double>& grid,
                                         const Eigen::VectorXd& pi);

struct FosterOptions {
  /// n0 is the smallest radius beyond which the drift is at most -min_margin.
  /// When no radius reaches it, the smallest radius with negative drift is
  /// reported instead.
  double min_margin = 0.5;
};

/// Foster drift scan for V(k) = |k| on the unit lattice k in Z, level k * d.
struct FosterReport {
  bool pass = false;
  int n0 = -1;           // F = {-n0..n0}
  double epsilon = 0.0;  // drift <= -epsilon for n0 < |k| <= x_max
  int x_max = 0;
  std::vector<int> states;      // -x_max..x_max
  std::vector<double> drift;    // sum_k' P(k, k') V(k') - V(k)
  std::vector<double> tail_up;   // P(k, k+1) V(k+1) for k = 0..x_max
  std::vector<double> tail_down; // P(-k, -k-1) V(-k-1) for k = 0..x_max
  bool finite_on_F = false;
  std::string message;
};

FosterReport foster_check(const ModelSpec& model, double step, int x_max = 200,
                          StepDirection direction = StepDirection::standard, const FosterOptions& options = {});

/// Stationary distribution, limiting information and drift margins in one report.
struct ChainReport {
  LatticeChain chain;
  ChainStationary stationary;
  LimitingInformation information;
  FosterReport drift;
};

ChainReport analyze_chain(const ModelSpec& model, double step, double x1, int K, int x_max = 200,
                          StepDirection direction = StepDirection::standard);

}  // namespace sensitest
