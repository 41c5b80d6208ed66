#include "sensitest/langlie.hpp"

#include <algorithm>
#include <cmath>

namespace sensitest {

void validate(const LanglieKernel& kernel) {
  if (!(kernel.eps > 0.0 && kernel.eps < 0.5)) throw DomainError("Langlie kernel: eps must lie in (0, 1/2)");
  if (kernel.grid_m < 10) throw DomainError("Langlie kernel: grid_m must be >= 10");
}

double to_unit(const MarkovLanglie& rule, double x) { return (x - rule.lower) / (rule.upper - rule.lower); }
double from_unit(const MarkovLanglie& rule, double u) { return rule.lower + (rule.upper - rule.lower) * u; }

LanglieKernel normalized_kernel(const MarkovLanglie& rule, const ModelSpec& model, int grid_m) {
  validate(DesignRule{rule});
  const double width = rule.upper - rule.lower;
  LanglieKernel kernel{rule.eps / width,
                       {model.link, Vec2(model.alpha() + model.beta() * rule.lower, model.beta() * width)},
                       grid_m};
  validate(kernel);
  return kernel;
}

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string("kernel_density: ") + what + " must lie in [0, 1]");
}

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

}  // namespace

double kernel_density(const LanglieKernel& kernel, double x, double xp) {
  check_unit(x, "x");
  check_unit(xp, "x'");
  const double H = link_eval(kernel.model.link, kernel.model.eta(x)).H;
  double density = 0.0;
  const double lo_left = x / 2;
  const double hi_right = (x + 1) / 2;
  if (xp >= lo_left && xp <= lo_left + kernel.eps) density += H / kernel.eps;
  if (xp >= hi_right - kernel.eps && xp <= hi_right) density += (1.0 - H) / kernel.eps;
  return density;
}

SparseMatrix discretize(const LanglieKernel& kernel) {
  validate(kernel);
  const int m = kernel.grid_m;
  const double h = 1.0 / m;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(2 * (kernel.eps * m + 2)));

  auto spread = [&](int row, double lo, double hi, double weight) {
    const int first = std::clamp(static_cast<int>(std::floor(lo * m)), 0, m - 1);
    const int last = std::clamp(static_cast<int>(std::floor(hi * m)), 0, m - 1);
    for (int c = first; c <= last; ++c) {
      const double len = overlap(lo, hi, c * h, (c + 1) * h);
      if (len > 0.0) triplets.emplace_back(row, c, weight * len / kernel.eps);
    }
  };

  for (int r = 0; r < m; ++r) {
    const double x = (r + 0.5) * h;
    const double H = link_eval(kernel.model.link, kernel.model.eta(x)).H;
    spread(r, x / 2, x / 2 + kernel.eps, H);
    spread(r, (x + 1) / 2 - kernel.eps, (x + 1) / 2, 1.0 - H);
  }
  SparseMatrix P(m, m);
  P.setFromTriplets(triplets.begin(), triplets.end());  // duplicates are summed
  P.makeCompressed();
  return P;
}

namespace {

InvariantMeasure solve_on_grid(const LanglieKernel& kernel) {
  const SparseMatrix P = discretize(kernel);
  const auto solution = solve_stationary(P);
  InvariantMeasure out;
  out.grid_m = kernel.grid_m;
  out.mass = solution.pi;
  out.residual = solution.residual;
  out.row_defect = max_row_defect(P);
  out.midpoints.reserve(static_cast<std::size_t>(kernel.grid_m));
  for (int c = 0; c < kernel.grid_m; ++c) out.midpoints.push_back((c + 0.5) / kernel.grid_m);
  if (out.residual > kInvariantResidualTol) {
    throw SingularError("invariant_measure: residual " + std::to_string(out.residual) + " exceeds tolerance");
  }
  return out;
}

}  // namespace

InvariantMeasure invariant_measure(const LanglieKernel& kernel, bool check_refinement) {
  validate(kernel);
  InvariantMeasure out = solve_on_grid(kernel);
  if (check_refinement) {
    LanglieKernel fine = kernel;
    fine.grid_m = 2 * kernel.grid_m;
    const InvariantMeasure refined = solve_on_grid(fine);
    out.refinement_tv = total_variation(out.mass, aggregate(refined.mass, kernel.grid_m));
    out.accepted = out.refinement_tv < kRefinementTvTol;
  } else {
    out.accepted = true;
  }
  return out;
}

Eigen::VectorXd occupation_histogram(const std::vector<double>& unit_levels, int grid_m) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(grid_m);
  for (const double u : unit_levels) {
    const int c = std::clamp(static_cast<int>(std::floor(u * grid_m)), 0, grid_m - 1);
    counts(c) += 1.0;
  }
  if (!unit_levels.empty()) counts /= static_cast<double>(unit_levels.size());
  return counts;
}

Eigen::VectorXd aggregate(const Eigen::VectorXd& mass, int bins) {
  if (bins <= 0 || mass.size() % bins != 0) throw DomainError("aggregate: cell count must be a multiple of bins");
  const Eigen::Index per = mass.size() / bins;
  Eigen::VectorXd out(bins);
  for (int b = 0; b < bins; ++b) out(b) = mass.segment(b * per, per).sum();
  return out;
}

double langlie_drift(const LanglieKernel& kernel, double m, double x) {
  const double H = link_eval(kernel.model.link, kernel.model.eta(x)).H;
  // The mean of V over a uniform interval is V at its midpoint.
  const double left_mean = m * (x / 2 + kernel.eps / 2) + 1.0;
  const double right_mean = m * ((x + 1) / 2 - kernel.eps / 2) + 1.0;
  return H * left_mean + (1.0 - H) * right_mean - (m * x + 1.0) + 1.0;
}

LanglieDriftReport drift_check(const LanglieKernel& kernel, std::optional<double> m) {
  LanglieDriftReport report;
  report.eps = kernel.eps;
  report.H1 = link_eval(kernel.model.link, kernel.model.eta(1.0)).H;
  if (!(report.H1 > 0.5)) {
    report.message = "precondition violated: H(alpha + beta) <= 1/2, the median is not covered on the right";
    return report;
  }
  report.precondition_ok = true;
  report.eps_max = report.H1 / (2.0 * (report.H1 - 0.5));
  if (report.eps_max < 0.5) {
    report.eps_bound = report.eps_max;
    report.binding_constraint = "eps < H1 / (2 (H1 - 1/2))";
  } else {
    report.eps_bound = 0.5;
    report.binding_constraint = "eps < 1/2";
  }
  report.eps_ok = kernel.eps > 0.0 && kernel.eps < report.eps_bound;
  const double bracket = kernel.eps * (report.H1 - 0.5) - report.H1 / 2;
  if (!(bracket < 0.0)) {
    report.message = "eps too large: the drift bracket at x = 1 is not negative";
    return report;
  }
  report.m_min = -1.0 / bracket;
  report.m = m.value_or(2.0 * report.m_min);
  report.drift_at_one = langlie_drift(kernel, report.m, 1.0);
  report.drift_closed_form = report.m * bracket + 1.0;

  int steps_taken = 0;
  const int total = static_cast<int>(std::lround(1.0 / report.scan_step));
  report.neighbourhood_lower = 1.0;
  for (; steps_taken <= total; ++steps_taken) {
    const double x = 1.0 - steps_taken * report.scan_step;
    if (!(langlie_drift(kernel, report.m, x) < 0.0)) break;
    report.neighbourhood_lower = std::max(0.0, x - report.scan_step);
  }
  if (steps_taken == 0) {
    report.message = report.m > report.m_min ? "drift not negative at x = 1" : "m does not exceed m_min";
  } else {
    report.message = "drift negative on a neighbourhood of 1";
  }
  if (report.m <= report.m_min) report.message += " (m <= m_min)";
  return report;
}

IntervalUnion interval_union(int generation, double eps, double x1) {
  if (generation < 1) throw DomainError("interval_union: generation must be >= 1");
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("interval_union: eps must lie in (0, 1/2)");
  if (!(x1 >= 0.0 && x1 <= 1.0)) throw DomainError("interval_union: x1 must lie in [0, 1]");

  std::vector<Interval> current{{x1, x1}};
  for (int i = 2; i <= generation; ++i) {
    std::vector<Interval> next;
    next.reserve(2 * current.size());
    for (const auto& iv : current) {
      next.push_back({iv.lower / 2, iv.upper / 2 + eps});
      next.push_back({(iv.lower + 1) / 2 - eps, (iv.upper + 1) / 2});
    }
    std::sort(next.begin(), next.end(), [](const Interval& a, const Interval& b) { return a.lower < b.lower; });
    std::vector<Interval> merged;
    for (const auto& iv : next) {
      if (!merged.empty() && iv.lower <= merged.back().upper) {
        merged.back().upper = std::max(merged.back().upper, iv.upper);
      } else {
        merged.push_back(iv);
      }
    }
    current = std::move(merged);
  }

  IntervalUnion out;
  out.generation = generation;
  out.intervals = current;
  out.raw_count = std::ldexp(1.0, generation - 1);
  const double tail = std::ldexp(1.0, 1 - generation);
  out.raw_length = 2.0 * (1.0 - tail) * eps;
  out.single = current.size() == 1;
  const double lo = std::ldexp(1.0, -generation);
  const double hi = 1.0 - lo;
  constexpr double tol = 1e-12;
  out.contained = current.front().lower >= lo - tol && current.back().upper <= hi + tol;
  out.full_span = out.single && std::abs(current.front().lower - lo) <= tol && std::abs(current.front().upper - hi) <= tol;
  out.overlap_condition = (1.0 - tail) * eps > tail;
  return out;
}

int overlap_bound_generation(double eps) {
  if (!(eps > 0.0)) throw DomainError("overlap_bound_generation: eps must be > 0");
  return static_cast<int>(std::floor(std::log2(1.0 + 1.0 / eps) + 1.0)) + 1;
}

int first_single_generation(double eps, int max_generation, double x1) {
  // Generation 1 is the single point {x1}.
  for (int i = 2; i <= max_generation; ++i) {
    if (interval_union(i, eps, x1).single) return i;
  }
  return -1;
}

}  // namespace sensitest
