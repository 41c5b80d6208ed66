#include "sensitest/serialize.hpp"

#include <charconv>

namespace sensitest {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double require_number(const json& j, const char* field) {
  if (!j.contains(field)) throw ValidationError(field, std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  if (!v.is_number()) throw ValidationError(field, std::string("field '") + field + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* field, double fallback) {
  return j.contains(field) ? require_number(j, field) : fallback;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json to_json(const Vec2& v) { return json::array({v(0), v(1)}); }
json to_json(const Mat2& m) { return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})}); }

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DomainError("expected a pair of numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

Mat2 mat2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DomainError("expected a 2x2 matrix");
  Mat2 m;
  m.row(0) = vec2_from_json(j[0]).transpose();
  m.row(1) = vec2_from_json(j[1]).transpose();
  return m;
}

json to_json(const DesignRule& rule) {
  json j = std::visit(overloaded{
                          [](const Bruceton& r) { return json{{"x1", r.x1}, {"d", r.step}}; },
                          [](const ReverseBruceton& r) { return json{{"x1", r.x1}, {"d", r.step}}; },
                          [](const RobbinsMonro& r) { return json{{"x1", r.x1}, {"c", r.gain}, {"q", r.target}}; },
                          [](const MarkovLanglie& r) { return json{{"a", r.lower}, {"b", r.upper}, {"eps", r.eps}}; },
                      },
                      rule);
  j["design"] = std::string(design_name(rule));
  return j;
}

DesignRule rule_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("design", "rule must be a JSON object");
  if (!j.contains("design") || !j["design"].is_string()) throw ValidationError("design", "missing field 'design'");
  const auto name = j["design"].get<std::string>();
  DesignRule rule;
  if (name == "bruceton") {
    rule = Bruceton{number_or(j, "x1", 0.0), require_number(j, "d")};
  } else if (name == "reverse-bruceton") {
    rule = ReverseBruceton{number_or(j, "x1", 0.0), require_number(j, "d")};
  } else if (name == "robbins-monro") {
    rule = RobbinsMonro{number_or(j, "x1", 0.0), require_number(j, "c"), number_or(j, "q", 0.5)};
  } else if (name == "langlie") {
    rule = MarkovLanglie{require_number(j, "a"), require_number(j, "b"), require_number(j, "eps")};
  } else {
    throw ValidationError("design", "unknown design '" + name + "'");
  }
  validate(rule);
  return rule;
}

json to_json(const SimSeed& seed) { return {{"master", seed.master}, {"stream", seed.stream}}; }

json to_json(const ModelSpec& model) {
  return {{"link", std::string(to_string(model.link))}, {"alpha", model.alpha()}, {"beta", model.beta()}};
}

json to_json(const EstimateResult& est) {
  return {{"theta_hat", to_json(est.theta_hat)},
          {"J_hat", to_json(est.J_hat)},
          {"cov_hat", to_json(est.cov_hat)},
          {"status", std::string(to_string(est.status))},
          {"loglik", number_or_null(est.loglik)},
          {"n", est.n},
          {"iterations", est.iterations},
          {"grad_norm", number_or_null(est.grad_norm)}};
}

json to_json(const Interval& iv) { return {{"lower", iv.lower}, {"upper", iv.upper}}; }

json to_json(const FiellerSet& set) {
  return {{"kind", std::string(to_string(set.kind))},
          {"lower", number_or_null(set.lower)},
          {"upper", number_or_null(set.upper)}};
}

json to_json(const ScoreBoundProfile& p) {
  return {{"link", std::string(to_string(p.link))},
          {"grid", {p.grid_min, p.grid_max, p.grid_step}},
          {"sup_fourth_moment", number_or_null(p.sup_fourth_moment)},
          {"sup_second_moment", number_or_null(p.sup_second_moment)},
          {"sup_information", number_or_null(p.sup_information)},
          {"argmax", {p.argmax_fourth_moment, p.argmax_second_moment, p.argmax_information}},
          {"all_finite", p.all_finite}};
}

json to_json(const DqmReport& r) {
  return {{"design", r.design},
          {"theta", to_json(r.theta)},
          {"link", std::string(to_string(r.link))},
          {"h", to_json(r.h)},
          {"reps", r.reps},
          {"n_grid", r.n_grid},
          {"median_sums", r.sums},
          {"inversions", r.inversions},
          {"allowed_inversions", r.allowed_inversions},
          {"result", r.pass ? "PASS" : "FAIL"}};
}

json to_json(const LanTrend& t) {
  return {{"design", t.design},
          {"theta0", to_json(t.theta0)},
          {"link", std::string(to_string(t.link))},
          {"h", to_json(t.h)},
          {"reps", t.reps},
          {"n_grid", t.n_grid},
          {"median_abs_remainder", t.median_abs_remainder},
          {"result", t.decreasing ? "PASS" : "FAIL"}};
}

json to_json(const FosterReport& r) {
  return {{"result", r.pass ? "PASS" : "FAIL"},
          {"n0", r.n0},
          {"epsilon", r.epsilon},
          {"x_max", r.x_max},
          {"finite_on_F", r.finite_on_F},
          {"tail_up", r.tail_up},
          {"tail_down", r.tail_down},
          {"message", r.message}};
}

json to_json(const ChainReport& r) {
  return {{"model", to_json(r.chain.model)},
          {"step", r.chain.step},
          {"x1", r.chain.x1},
          {"K", r.chain.K},
          {"residual", r.stationary.residual},
          {"period", r.stationary.period},
          {"J", to_json(r.information.J)},
          {"J_min_eigenvalue", r.information.min_eigenvalue},
          {"J_invertible", r.information.invertible},
          {"support", r.information.support},
          {"drift", to_json(r.drift)}};
}

json to_json(const LanglieDriftReport& r) {
  return {{"precondition_ok", r.precondition_ok},
          {"H1", r.H1},
          {"eps", r.eps},
          {"eps_max", r.eps_max},
          {"eps_bound", r.eps_bound},
          {"binding_constraint", r.binding_constraint},
          {"eps_ok", r.eps_ok},
          {"m_min", r.m_min},
          {"m", r.m},
          {"drift_at_one", r.drift_at_one},
          {"drift_closed_form", r.drift_closed_form},
          {"negative_on_lower", r.neighbourhood_lower},
          {"scan_step", r.scan_step},
          {"message", r.message}};
}

json to_json(const IntervalUnion& u) {
  json intervals = json::array();
  for (const auto& iv : u.intervals) intervals.push_back(json::array({iv.lower, iv.upper}));
  return {{"generation", u.generation},
          {"intervals", intervals},
          {"raw_count", u.raw_count},
          {"raw_length", u.raw_length},
          {"single", u.single},
          {"full_span", u.full_span},
          {"contained", u.contained},
          {"overlap_condition", u.overlap_condition}};
}

json to_json(const InvariantMeasure& m) {
  return {{"grid_m", m.grid_m},
          {"residual", m.residual},
          {"row_defect", m.row_defect},
          {"refinement_tv", m.refinement_tv},
          {"accepted", m.accepted}};
}

json to_json(const McReport& r) {
  json j{{"design", r.design},
         {"theta0", to_json(r.theta0)},
         {"n", r.n},
         {"reps", r.reps},
         {"kept_reps", r.kept},
         {"attrition", r.attrition},
         {"status_counts",
          {{"converged", r.status_counts[0]},
           {"separated", r.status_counts[1]},
           {"singular_information", r.status_counts[2]},
           {"max_iter", r.status_counts[3]}}},
         {"flag", r.unreliable ? "UNRELIABLE" : "OK"},
         {"mean", to_json(r.mean)},
         {"mean_se", to_json(r.mean_se)},
         {"covariance", to_json(r.covariance)},
         {"reference_source", r.reference_source},
         {"q", r.q},
         {"level", r.level},
         {"gamma_q", r.gamma_q},
         {"coverage", {{"wald", r.coverage_wald}, {"fieller", r.coverage_fieller}}},
         {"fieller_unbounded", r.fieller_unbounded},
         {"min_fieller_wald_ratio", r.min_fieller_wald_ratio},
         {"median_qv_condition", number_or_null(r.median_qv_condition)}};
  j["reference_J"] = r.reference_J ? to_json(*r.reference_J) : json(nullptr);
  j["reference_J_inv"] = r.reference_J_inv ? to_json(*r.reference_J_inv) : json(nullptr);
  j["covariance_rel_error"] = r.covariance_rel_error ? json(*r.covariance_rel_error) : json(nullptr);
  j["ks"] = r.ks ? json::array({(*r.ks)[0], (*r.ks)[1]}) : json(nullptr);
  j["median_J_hat_distance"] = r.median_J_hat_distance ? json(*r.median_J_hat_distance) : json(nullptr);
  return j;
}

void write_dqm_csv(const DqmReport& report, std::ostream& out) {
  out << "n,median_sum\n";
  for (std::size_t i = 0; i < report.n_grid.size(); ++i) {
    out << report.n_grid[i] << ',' << format_double(report.sums[i]) << '\n';
  }
}

void write_lan_csv(const LanTrend& trend, std::ostream& out) {
  out << "n,median_abs_remainder\n";
  for (std::size_t i = 0; i < trend.n_grid.size(); ++i) {
    out << trend.n_grid[i] << ',' << format_double(trend.median_abs_remainder[i]) << '\n';
  }
}

void write_pi_csv(const LatticeChain& chain, const Eigen::VectorXd& pi, std::ostream& out) {
  out << "x,pi\n";
  for (std::size_t i = 0; i < chain.grid.size(); ++i) {
    out << format_double(chain.grid[i]) << ',' << format_double(pi(static_cast<Eigen::Index>(i))) << '\n';
  }
}

void write_invariant_csv(const InvariantMeasure& m, std::ostream& out) {
  out << "cell_midpoint,mass\n";
  for (std::size_t i = 0; i < m.midpoints.size(); ++i) {
    out << format_double(m.midpoints[i]) << ',' << format_double(m.mass(static_cast<Eigen::Index>(i))) << '\n';
  }
}

void write_replications_csv(const McReport& report, std::ostream& out) {
  out << "rep,alpha_hat,beta_hat,status\n";
  for (const auto& rep : report.replications) {
    out << rep.rep << ',' << format_double(rep.theta_hat(0)) << ',' << format_double(rep.theta_hat(1)) << ','
        << to_string(rep.status) << '\n';
  }
}

}  // namespace sensitest
