#pragma once

// JSON layouts. Arrays are flat and row-major; field names follow the types.

#include <json.hpp>

#include "bsdej/estimates.hpp"
#include "bsdej/randomness.hpp"
#include "bsdej/scenario_tree.hpp"
#include "bsdej/solver.hpp"
#include "bsdej/spaces_norms.hpp"
#include "bsdej/stochastic_integrals.hpp"

namespace bsdej {

nlohmann::json to_json(const TimeGrid& grid);
nlohmann::json to_json(const MarkSpace& marks);

/// {"grid", "dim", "n_paths", "seed", "increments": (path, step, dim),
///  "marks" (or null), "jumps": [[{"time", "mark", "step"}, ...] per path]}
nlohmann::json to_json(const PathBatch& batch);
PathBatch path_batch_from_json(const nlohmann::json& j);

/// {"grid", "marks", "dim", "recombining", "branching", "jump_probabilities",
///  "layers": [{"probability", "brownian": (node, dim), "jump_counts": (node, mark),
///              "children": (node, branch)}]}
nlohmann::json to_json(const ScenarioTree& tree);

/// {"grid", "n_paths", "terminal_values", "terminal_qv"}
nlohmann::json to_json(const IntegralResult& result);

/// {"norm", "p", "value", "estimator", "n_paths", "seed"}
nlohmann::json to_json(const NormReport& report);

nlohmann::json to_json(const PicardTrace& trace);
nlohmann::json to_json(const SubdivisionPlan& plan);
nlohmann::json to_json(const LadderReport& report);
nlohmann::json to_json(const EstimateReport& report);
nlohmann::json to_json(const UniquenessReport& report);

}  // namespace bsdej
