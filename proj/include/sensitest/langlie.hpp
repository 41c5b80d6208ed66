#pragma once

#include "sensitest/design.hpp"
#include "sensitest/inference.hpp"
#include "sensitest/markov.hpp"
#include "sensitest/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sensitest {

/// Markovian Langlie kernel on the normalized domain [0, 1]:
/// k(x, .) = H_x U[x/2, x/2 + eps] + (1 - H_x) U[(x+1)/2 - eps, (x+1)/2].
struct LanglieKernel {
  double eps = 0.1;
  ModelSpec model;  // acts on the normalized level
  int grid_m = 1000;
};

void validate(const LanglieKernel& kernel);

/// Affine map of bounds [a, b] onto [0, 1]; theta and eps are rescaled so the
/// kernel describes the same chain.
LanglieKernel normalized_kernel(const MarkovLanglie& rule, const ModelSpec& model, int grid_m = 1000);
double to_unit(const MarkovLanglie& rule, double x);
double from_unit(const MarkovLanglie& rule, double u);

double kernel_density(const LanglieKernel& kernel, double x, double xp);

/// Cell-to-cell transition matrix on m equal cells of [0, 1]. Each row is the
/// kernel at the cell midpoint integrated exactly over every target cell.
SparseMatrix discretize(const LanglieKernel& kernel);

struct InvariantMeasure {
  int grid_m = 0;
  std::vector<double> midpoints;
  Eigen::VectorXd mass;
  double residual = 0.0;
  double row_defect = 0.0;
  /// TV between this measure and the doubled-grid measure aggregated back
  /// onto this grid; negative when the refinement check was skipped.
  double refinement_tv = -1.0;
  bool accepted = false;
};

inline constexpr double kInvariantResidualTol = 1e-10;
inline constexpr double kRefinementTvTol = 1e-3;

/// Throws SingularError when the residual exceeds kInvariantResidualTol.
InvariantMeasure invariant_measure(const LanglieKernel& kernel, bool check_refinement = true);

/// Occupation histogram of a level sequence on the unit grid of `grid_m` cells.
Eigen::VectorXd occupation_histogram(const std::vector<double>& unit_levels, int grid_m);

/// Aggregates a cell distribution onto `bins` coarser equal bins (grid_m must be divisible).
Eigen::VectorXd aggregate(const Eigen::VectorXd& mass, int bins);

/// Drift of V(x) = m x + 1, reported as the integral of V against k(x, .)
/// minus V(x) plus one.
double langlie_drift(const LanglieKernel& kernel, double m, double x);

struct LanglieDriftReport {
  bool precondition_ok = false;  // H_1 > 1/2
  double H1 = 0.0;
  double eps = 0.0;
  double eps_max = 0.0;          // H_1 / (2 (H_1 - 1/2))
  double eps_bound = 0.0;        // min(eps_max, 1/2)
  std::string binding_constraint;
  bool eps_ok = false;
  double m_min = 0.0;            // 1 / (H_1 / 2 - eps (H_1 - 1/2))
  double m = 0.0;
  double drift_at_one = 0.0;     // from the integral
  double drift_closed_form = 0.0;  // m [eps (H_1 - 1/2) - H_1 / 2] + 1
  double neighbourhood_lower = 1.0;  // drift < 0 on (lower, 1]
  double scan_step = 1e-4;
  std::string message;
};

/// When `m` is absent, 2 m_min is used.
LanglieDriftReport drift_check(const LanglieKernel& kernel, std::optional<double> m = std::nullopt);

struct IntervalUnion {
  int generation = 1;
  std::vector<Interval> intervals;  // merged, ascending
  double raw_count = 1.0;           // 2^{i-1} intervals before merging
  double raw_length = 0.0;          // 2 (1 - 2^{1-i}) eps
  bool single = false;
  bool full_span = false;           // equals [2^-i, 1 - 2^-i]
  bool contained = false;           // within [2^-i, 1 - 2^-i]
  bool overlap_condition = false;   // (1 - 2^{1-i}) eps > 2^{1-i}
};

/// Support of X_i started from x1 under both affine maps, merged.
IntervalUnion interval_union(int generation, double eps, double x1 = 0.5);

/// Smallest integer N > log2(1 + 1/eps) + 1.
int overlap_bound_generation(double eps);

/// First generation in [2, max_generation] whose support is one interval, or -1.
int first_single_generation(double eps, int max_generation = 30, double x1 = 0.5);

}  // namespace sensitest
