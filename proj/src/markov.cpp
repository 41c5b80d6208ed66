#include "sensitest/markov.hpp"

#include "sensitest/model.hpp"

#include <Eigen/SparseLU>

#include <deque>
#include <numeric>
#include <vector>

namespace sensitest {

StationarySolution solve_stationary(const SparseMatrix& P) {
  const Eigen::Index n = P.rows();
  if (n == 0 || P.cols() != n) throw DomainError("solve_stationary: transition matrix must be square and non-empty");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(P.nonZeros() + 2 * n));
  // Row i of the system is column i of P^T - I; the last one becomes ones.
  for (Eigen::Index r = 0; r < n; ++r) {
    for (SparseMatrix::InnerIterator it(P, r); it; ++it) {
      if (it.col() != n - 1) triplets.emplace_back(it.col(), r, it.value());
    }
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) triplets.emplace_back(i, i, -1.0);
  for (Eigen::Index j = 0; j < n; ++j) triplets.emplace_back(n - 1, j, 1.0);

  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(triplets.begin(), triplets.end());
  system.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) throw SingularError("solve_stationary: factorization failed: " + lu.lastErrorMessage());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  StationarySolution out;
  out.pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !out.pi.allFinite()) throw SingularError("solve_stationary: solve failed");
  // Rounding can leave tiny negative masses in the far tails.
  out.pi = out.pi.cwiseMax(0.0);
  out.pi /= out.pi.sum();
  const Eigen::VectorXd moved = P.transpose() * out.pi;
  out.residual = (moved - out.pi).lpNorm<1>();
  return out;
}

StationarySolution solve_stationary(const Eigen::MatrixXd& P) {
  const SparseMatrix sparse = P.sparseView();
  return solve_stationary(sparse);
}

StationarySolution lazy_power_stationary(const SparseMatrix& P, double tol, int max_iter) {
  const Eigen::Index n = P.rows();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const SparseMatrix Pt = P.transpose();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = 0.5 * (Pt * pi + pi);
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi = std::move(next);
    if (change < tol) break;
  }
  StationarySolution out;
  out.pi = pi;
  out.residual = (Pt * pi - pi).lpNorm<1>();
  return out;
}

int chain_period(const SparseMatrix& P) {
  const Eigen::Index n = P.rows();
  if (n == 0) return 0;
  std::vector<long> level(static_cast<std::size_t>(n), -1);
  std::deque<Eigen::Index> queue{0};
  level[0] = 0;
  long g = 0;
  while (!queue.empty()) {
    const Eigen::Index u = queue.front();
    queue.pop_front();
    for (SparseMatrix::InnerIterator it(P, u); it; ++it) {
      if (it.value() <= 0.0) continue;
      const auto v = static_cast<std::size_t>(it.col());
      const long lu = level[static_cast<std::size_t>(u)];
      if (level[v] < 0) {
        level[v] = lu + 1;
        queue.push_back(it.col());
      } else {
        g = std::gcd(g, std::abs(lu + 1 - level[v]));
      }
    }
  }
  return static_cast<int>(g);
}

double max_row_defect(const SparseMatrix& P) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(P, r); it; ++it) s += it.value();
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw DomainError("total_variation: size mismatch");
  return 0.5 * (p - q).lpNorm<1>();
}

}  // namespace sensitest
