#include "sensitest/design.hpp"

#include <cmath>
#include <sstream>

namespace sensitest {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void require_finite(const char* field, double v) {
  if (!std::isfinite(v)) throw ValidationError(field, std::string(field) + " must be finite");
}

}  // namespace

void validate(const DesignRule& rule) {
  std::visit(overloaded{
                 [](const Bruceton& r) {
                   require_finite("x1", r.x1);
                   if (!(r.step > 0) || !std::isfinite(r.step)) throw ValidationError("d", "step size d must be > 0");
                 },
                 [](const ReverseBruceton& r) {
                   require_finite("x1", r.x1);
                   if (!(r.step > 0) || !std::isfinite(r.step)) throw ValidationError("d", "step size d must be > 0");
                 },
                 [](const RobbinsMonro& r) {
                   require_finite("x1", r.x1);
                   if (!(r.gain > 0) || !std::isfinite(r.gain)) throw ValidationError("c", "gain scale c must be > 0");
                   if (!(r.target > 0 && r.target < 1)) throw ValidationError("q", "target quantile q must lie in (0, 1)");
                 },
                 [](const MarkovLanglie& r) {
                   require_finite("a", r.lower);
                   require_finite("b", r.upper);
                   if (!(r.lower < r.upper)) throw ValidationError("b", "upper bound b must exceed lower bound a");
                   if (!(r.eps > 0)) throw ValidationError("eps", "eps must be > 0");
                   if (!(r.eps < (r.upper - r.lower) / 2)) {
                     std::ostringstream msg;
                     msg << "eps must be < (b - a) / 2 = " << (r.upper - r.lower) / 2
                         << " so the two kernel intervals do not overlap";
                     throw ValidationError("eps", msg.str());
                   }
                 },
             },
             rule);
}

std::string_view design_name(const DesignRule& rule) {
  return std::visit(overloaded{
                        [](const Bruceton&) { return std::string_view("bruceton"); },
                        [](const ReverseBruceton&) { return std::string_view("reverse-bruceton"); },
                        [](const RobbinsMonro&) { return std::string_view("robbins-monro"); },
                        [](const MarkovLanglie&) { return std::string_view("langlie"); },
                    },
                    rule);
}

bool uses_noise(const DesignRule& rule) { return std::holds_alternative<MarkovLanglie>(rule); }

double first_level(const DesignRule& rule) {
  return std::visit(overloaded{
                        [](const Bruceton& r) { return r.x1; },
                        [](const ReverseBruceton& r) { return r.x1; },
                        [](const RobbinsMonro& r) { return r.x1; },
                        [](const MarkovLanglie& r) { return (r.lower + r.upper) / 2; },
                    },
                    rule);
}

Rng::Rng(SimSeed seed) {
  std::uint64_t state = seed.master ^ 0x5851f42d4c957f2dULL;
  const std::uint64_t a = splitmix64(state);
  state ^= seed.stream * 0xd1b54a32d192ed03ULL;
  const std::uint64_t b = splitmix64(state);
  const std::uint64_t c = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double rm_gain(double gain, std::size_t i) {
  if (!(gain > 0)) throw DomainError("rm_gain: gain must be > 0");
  if (i < 1) throw DomainError("rm_gain: index must be >= 1");
  return gain / static_cast<double>(i);
}

double next_level(const DesignRule& rule, std::span<const Trial> history, std::optional<double> noise) {
  const bool wants_noise = uses_noise(rule);
  if (wants_noise && !noise && !history.empty()) throw ContractError("Langlie rule requires a noise draw");
  if (!wants_noise && noise) throw ContractError(std::string(design_name(rule)) + " rule takes no noise draw");
  if (noise && !(*noise >= 0.0 && *noise <= 1.0)) throw DomainError("noise must lie in [0, 1]");
  if (history.empty()) return first_level(rule);

  const Trial& last = history.back();
  check_outcome(last.y);
  return std::visit(overloaded{
                        [&](const Bruceton& r) { return last.y == 1 ? last.x - r.step : last.x + r.step; },
                        [&](const ReverseBruceton& r) { return last.y == 1 ? last.x + r.step : last.x - r.step; },
                        [&](const RobbinsMonro& r) {
                          return last.x - rm_gain(r.gain, last.index) * (last.y - r.target);
                        },
                        [&](const MarkovLanglie& r) {
                          return last.y == 1 ? (r.lower + last.x) / 2 + r.eps * *noise
                                             : (last.x + r.upper) / 2 - r.eps * *noise;
                        },
                    },
                    rule);
}

double next_level(const ExperimentPath& path) {
  std::optional<double> noise;
  if (uses_noise(path.rule) && !path.trials.empty()) {
    if (path.noise.size() < path.trials.size()) throw ContractError("path has no noise draw for its last trial");
    noise = path.noise[path.trials.size() - 1];
  }
  return next_level(path.rule, path.trials, noise);
}

bool covers_median(const MarkovLanglie& rule, const ModelSpec& model) {
  if (model.beta() == 0.0) return false;
  const double median = -model.alpha() / model.beta();
  return rule.lower < median && median < rule.upper;
}

ExperimentPath simulate_path(const DesignRule& rule, const ModelSpec& model, std::size_t n, SimSeed seed) {
  validate(rule);
  if (n < 1) throw DomainError("simulate_path: n must be >= 1");
  ExperimentPath path{rule, {}, seed, {}, {}};
  if (const auto* langlie = std::get_if<MarkovLanglie>(&rule); langlie && !covers_median(*langlie, model)) {
    path.warnings.emplace_back("Langlie bounds do not cover the model median -alpha/beta");
  }
  path.trials.reserve(n);
  if (uses_noise(rule)) path.noise.reserve(n);

  Rng rng(seed);
  double x = first_level(rule);
  for (std::size_t i = 1; i <= n; ++i) {
    const double p = link_eval(model.link, model.eta(x)).H;
    const int y = rng.bernoulli(p) ? 1 : 0;
    path.trials.push_back({i, x, y});
    std::optional<double> u;
    if (uses_noise(rule)) {
      u = rng.uniform();
      path.noise.push_back(*u);
    }
    x = next_level(rule, path.trials, u);
  }
  return path;
}

bool replays_exactly(const ExperimentPath& path) {
  if (path.trials.empty()) return true;
  if (path.trials.front().x != first_level(path.rule)) return false;
  for (std::size_t i = 1; i < path.trials.size(); ++i) {
    std::optional<double> u;
    if (uses_noise(path.rule)) {
      if (path.noise.size() < i) return false;
      u = path.noise[i - 1];
    }
    const std::span<const Trial> history(path.trials.data(), i);
    if (next_level(path.rule, history, u) != path.trials[i].x) return false;
    if (path.trials[i].index != i + 1) return false;
  }
  return true;
}

}  // namespace sensitest
