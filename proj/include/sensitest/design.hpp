#pragma once

#include "sensitest/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sensitest {

/// Step down by `step` after a response, up after a non-response.
struct Bruceton {
  double x1 = 0.0;
  double step = 1.0;
};

/// Up after a response, down after a non-response. Diverges almost surely.
struct ReverseBruceton {
  double x1 = 0.0;
  double step = 1.0;
};

/// x_{i+1} = x_i - (gain / i) (y_i - target).
struct RobbinsMonro {
  double x1 = 0.0;
  double gain = 1.0;
  double target = 0.5;
};

/// Bisection toward the stored bounds with a uniform perturbation of size eps.
struct MarkovLanglie {
  double lower = 0.0;
  double upper = 1.0;
  double eps = 0.1;
};

using DesignRule = std::variant<Bruceton, ReverseBruceton, RobbinsMonro, MarkovLanglie>;

/// A rule parameter that violates its invariant. `field` names the offender.
struct ValidationError : std::invalid_argument {
  ValidationError(std::string field_name, const std::string& message)
      : std::invalid_argument(message), field(std::move(field_name)) {}
  std::string field;
};

/// Noise supplied to a rule that does not take it, or missing where required.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

void validate(const DesignRule& rule);
std::string_view design_name(const DesignRule& rule);
bool uses_noise(const DesignRule& rule);
/// x_1; the midpoint of the bounds for Langlie.
double first_level(const DesignRule& rule);

struct Trial {
  std::size_t index = 1;
  double x = 0.0;
  int y = 0;
};

/// Master seed plus stream id. Distinct stream ids give independent streams.
struct SimSeed {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;
};

/// Deterministic generator for one stream. Uniforms are built from raw bits
/// so sequences do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(SimSeed seed);
  /// Uniform on [0, 1).
  double uniform();
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller on two uniforms.
  double normal();
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct ExperimentPath {
  DesignRule rule;
  std::vector<Trial> trials;
  SimSeed seed;
  /// Langlie only: noise[i] is the uniform draw that produced the level
  /// following trials[i]. Empty for the other rules.
  std::vector<double> noise;
  std::vector<std::string> warnings;

  std::size_t size() const { return trials.size(); }
};

double rm_gain(double gain, std::size_t i);

/// The level of the trial following `history`. Returns x_1 for an empty
/// history. Langlie requires a noise draw in [0, 1]; the others reject one.
double next_level(const DesignRule& rule, std::span<const Trial> history,
                  std::optional<double> noise = std::nullopt);

/// The level recommended after the last trial of a recorded path.
double next_level(const ExperimentPath& path);

/// Bernoulli outcomes from `model`, levels from `rule`.
ExperimentPath simulate_path(const DesignRule& rule, const ModelSpec& model, std::size_t n, SimSeed seed);

/// Recomputes every recommended level from the recorded outcomes and noise
/// and reports whether each matches the stored level exactly.
bool replays_exactly(const ExperimentPath& path);

/// a < -alpha / beta < b for the Langlie bounds.
bool covers_median(const MarkovLanglie& rule, const ModelSpec& model);

}  // namespace sensitest
