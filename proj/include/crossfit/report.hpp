#pragma once

#include <string>

#include "json.hpp"

#include "crossfit/estimators.hpp"
#include "crossfit/simlab.hpp"
#include "crossfit/splitting.hpp"

namespace crossfit {

using Json = nlohmann::json;  // alphabetical key order keeps dumps stable

// Shortest-exact is not guaranteed to show 15 significant digits, so reports
// carry a %.17g string next to each numeric beta.
std::string repr17(double v);

std::string iso_timestamp_utc();

const char* plan_kind_name(PlanKind kind);

Json plan_to_json(const SplitPlan& plan);
Json gram_to_json(const GramSummary& s);
Json estimate_to_json(const EstimateResult& res);
Json mc_to_json(const MonteCarloReport& report);
Json rate_to_json(const RateReport& report);

}  // namespace crossfit
