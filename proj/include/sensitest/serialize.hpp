#pragma once

#include "sensitest/chain.hpp"
#include "sensitest/design.hpp"
#include "sensitest/dqm.hpp"
#include "sensitest/inference.hpp"
#include "sensitest/langlie.hpp"
#include "sensitest/mc.hpp"
#include "sensitest/model.hpp"

#include "json.hpp"

#include <ostream>

namespace sensitest {

using json = nlohmann::json;

json to_json(const Vec2& v);
json to_json(const Mat2& m);
Vec2 vec2_from_json(const json& j);
Mat2 mat2_from_json(const json& j);

/// Flat object: {"design": "bruceton", "x1": ..., "d": ...}. Robbins-Monro
/// uses x1, c, q; Langlie uses a, b, eps.
json to_json(const DesignRule& rule);
/// Throws ValidationError naming the missing or malformed field.
DesignRule rule_from_json(const json& j);

json to_json(const SimSeed& seed);
json to_json(const ModelSpec& model);
json to_json(const EstimateResult& est);
json to_json(const Interval& iv);
json to_json(const FiellerSet& set);
json to_json(const ScoreBoundProfile& profile);
json to_json(const DqmReport& report);
json to_json(const LanTrend& trend);
json to_json(const FosterReport& report);
json to_json(const ChainReport& report);
json to_json(const LanglieDriftReport& report);
json to_json(const IntervalUnion& u);
json to_json(const InvariantMeasure& m);
/// Summary statistics only; per-replication rows go to CSV.
json to_json(const McReport& report);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_dqm_csv(const DqmReport& report, std::ostream& out);                 // n,median_sum
void write_lan_csv(const LanTrend& trend, std::ostream& out);                    // n,median_abs_remainder
void write_pi_csv(const LatticeChain& chain, const Eigen::VectorXd& pi, std::ostream& out);  // x,pi
void write_invariant_csv(const InvariantMeasure& m, std::ostream& out);         // cell_midpoint,mass
void write_replications_csv(const McReport& report, std::ostream& out);         // rep,alpha_hat,beta_hat,status

}  // namespace sensitest
