#pragma once

#include <string>

#include <json.hpp>

#include "bek.hpp"
#include "equilibrium.hpp"
#include "measures.hpp"
#include "rewards.hpp"
#include "snell.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace mfstop::io {

using nlohmann::json;

/// Parses a decimal string ("0.25"), a ratio ("1/3") or a JSON number. Throws InputError.
double parse_probability(const json& v);

TreeSpec tree_spec_from_json(const json& j);
json tree_to_json(const ScenarioTree& tree);

/// Node-valued fields accept a number (constant), an object keyed by node id, or
/// {"by_level": [...]}.
AdaptedProcess node_values_from_json(const json& v, const ScenarioTree& tree, const std::string& field);
json node_values_to_json(const AdaptedProcess& x, const ScenarioTree& tree);

RewardSpec reward_spec_from_json(const json& j, const ScenarioTree& tree);
json reward_spec_to_json(const RewardSpec& spec, const ScenarioTree& tree);

RandomMeasure measure_from_json(const json& j, const ScenarioTree& tree);
json measure_to_json(const RandomMeasure& m, const ScenarioTree& tree);

StopRule stop_from_json(const json& j, const ScenarioTree& tree);
json stop_to_json(const StopRule& stop, const ScenarioTree& tree);

json snell_to_json(const SnellResult& r, const ScenarioTree& tree);

/// Per-node L and M plus residual; loading recomputes M from L.
json bek_to_json(const BEKSolution& sol, const ScenarioTree& tree);
BEKSolution bek_from_json(const json& j, const ScenarioTree& tree);

json report_to_json(const VerifyReport& r);
json result_to_json(const EquilibriumResult& r, const ScenarioTree& tree);
json comparative_to_json(const ComparativeReport& r, const ScenarioTree& tree);
json assumptions_to_json(const AssumptionReport& r);

/// CSV tables.
std::string trace_csv(const EquilibriumResult& r, const ScenarioTree& tree);
/// Running-supremum path of M per leaf: leaf,k,t,M (first row per leaf at t_0 is -inf).
std::string running_sup_csv(const BEKSolution& sol, const ScenarioTree& tree);
/// Level-grid hitting table: level,leaf,sigma_t,tau_t (stopping time of each leaf path).
std::string level_table_csv(const BEKSolution& sol, const ScenarioTree& tree);

json read_json_file(const std::string& path);

}  // namespace mfstop::io
