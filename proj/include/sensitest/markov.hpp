#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace sensitest {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct StationarySolution {
  Eigen::VectorXd pi;
  double residual = 0.0;  // || pi P - pi ||_1
};

/// Solves pi P = pi, sum(pi) = 1 directly: the last balance equation of
/// (P^T - I) pi = 0 is replaced by the normalization row. Throws
/// SingularError when the factorization fails.
StationarySolution solve_stationary(const SparseMatrix& P);
StationarySolution solve_stationary(const Eigen::MatrixXd& P);

/// Same fixed point through the lazy operator (P + I) / 2, iterated until
/// the L1 change drops below `tol`. Used as an independent cross-check.
StationarySolution lazy_power_stationary(const SparseMatrix& P, double tol = 1e-13, int max_iter = 2'000'000);

/// Period of the directed graph with an edge i -> j wherever P(i, j) > 0.
/// Assumes the graph is strongly connected.
int chain_period(const SparseMatrix& P);

/// Largest |row sum - 1|.
double max_row_defect(const SparseMatrix& P);

/// Total variation distance (1/2) || p - q ||_1.
double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace sensitest
