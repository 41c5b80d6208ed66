#pragma once

#include "sensitest/design.hpp"
#include "sensitest/inference.hpp"
#include "sensitest/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace sensitest {

/// D_{theta,h}(x): the squared L2 remainder of the root density expansion,
/// summed over y in {0, 1}.
template <typename Scalar>
Scalar d_remainder(const BasicModel<Scalar>& model, const Vector2<Scalar>& h, Scalar x) {
  using std::sqrt;
  const BasicModel<Scalar> shifted{model.link, model.theta + h};
  Scalar total(0);
  for (int y = 0; y <= 1; ++y) {
    const Scalar root0 = sqrt(conditional_density(model, x, y));
    const Scalar root1 = sqrt(conditional_density(shifted, x, y));
    const Scalar r = root1 - root0 - Scalar(0.5) * h.dot(score(model, x, y)) * root0;
    total += r * r;
  }
  return total;
}

/// Double-precision entry point; evaluates in long double to keep the
/// second-order cancellation below 1e-14 relative.
double d_remainder(const ModelSpec& model, const Vec2& h, double x);

/// sum_i D_{theta, h / sqrt(n)}(x_i) with n = xs.size().
double sdqm_sum(std::span<const double> xs, const ModelSpec& model, const Vec2& h);

struct DqmReport {
  std::string design;
  Vec2 theta = Vec2::Zero();
  Link link = Link::logit;
  Vec2 h = Vec2::Zero();
  std::size_t reps = 0;
  std::vector<std::size_t> n_grid;
  std::vector<double> sums;  // median over reps of the S-DQM sum at each n
  int inversions = 0;        // consecutive increases along n_grid
  int allowed_inversions = 1;
  bool pass = false;
};

/// Simulates `reps` paths per n (replication r uses stream seed.stream + r),
/// takes the median S-DQM sum, and passes when the medians decrease with at
/// most one inversion.
DqmReport sdqm_trend(const DesignRule& rule, const ModelSpec& model, const Vec2& h,
                     const std::vector<std::size_t>& n_grid, std::size_t reps, SimSeed seed);

}  // namespace sensitest
