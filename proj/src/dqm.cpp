#include "sensitest/dqm.hpp"

#include <algorithm>
#include <cmath>

namespace sensitest {

double d_remainder(const ModelSpec& model, const Vec2& h, double x) {
  return static_cast<double>(
      d_remainder<long double>(model.cast<long double>(), h.cast<long double>(), static_cast<long double>(x)));
}

double sdqm_sum(std::span<const double> xs, const ModelSpec& model, const Vec2& h) {
  if (xs.empty()) throw DomainError("sdqm_sum: empty covariate sequence");
  const auto n = static_cast<long double>(xs.size());
  const BasicModel<long double> m = model.cast<long double>();
  const Vector2<long double> hn = h.cast<long double>() / std::sqrt(n);
  long double total = 0.0L;
  for (const double x : xs) total += d_remainder<long double>(m, hn, static_cast<long double>(x));
  return static_cast<double>(total);
}

DqmReport sdqm_trend(const DesignRule& rule, const ModelSpec& model, const Vec2& h,
                     const std::vector<std::size_t>& n_grid, std::size_t reps, SimSeed seed) {
  if (n_grid.empty()) throw DomainError("sdqm_trend: empty n grid");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end()) {
    throw DomainError("sdqm_trend: n grid must be strictly increasing");
  }
  if (reps < 1) throw DomainError("sdqm_trend: reps must be >= 1");

  DqmReport report;
  report.design = std::string(design_name(rule));
  report.theta = model.theta;
  report.link = model.link;
  report.h = h;
  report.reps = reps;
  report.n_grid = n_grid;
  for (const std::size_t n : n_grid) {
    std::vector<double> sums;
    sums.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      const auto path = simulate_path(rule, model, n, {seed.master, seed.stream + r});
      std::vector<double> xs;
      xs.reserve(n);
      for (const auto& t : path.trials) xs.push_back(t.x);
      sums.push_back(sdqm_sum(xs, model, h));
    }
    report.sums.push_back(median(std::move(sums)));
  }
  for (std::size_t i = 1; i < report.sums.size(); ++i) {
    if (report.sums[i] >= report.sums[i - 1]) ++report.inversions;
  }
  report.pass = report.inversions <= report.allowed_inversions && report.sums.back() < report.sums.front();
  return report;
}

}  // namespace sensitest
