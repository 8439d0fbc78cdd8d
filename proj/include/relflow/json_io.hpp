#ifndef RELFLOW_JSON_IO_HPP
#define RELFLOW_JSON_IO_HPP

#include "relflow/grid.hpp"
#include "relflow/points.hpp"
#include "relflow/synthesis.hpp"
#include "relflow/types.hpp"

#include <json.hpp>

#include <string>

namespace relflow {

using Json = nlohmann::json;

// Wire schemas:
//   schedule:  { "horizon": T, "segments": [ { "t0", "t1", "w": [...],
//                "a": [...], "b": ... } ] }
//   grid:      { "R", "h", "shape": [...], "values": [...] }  (row-major)
//   plan:      schedule with matrix "w" and vector "b" per segment

Json schedule_to_json(const ControlSchedule& s);
ControlSchedule schedule_from_json(const Json& j);

Json grid_to_json(const GridDensity& g);
GridDensity grid_from_json(const Json& j);

Json matching_plan_to_json(const MatchingPlan& p);
MatchingPlan matching_plan_from_json(const Json& j);

Json synthesis_report_to_json(const SynthesisReport& r);

/// Header + one value row for sweep tables.
std::string synthesis_report_csv_header();
std::string synthesis_report_csv_row(const SynthesisReport& r);

/// Rejects unknown keys anywhere a schema is fixed.
void require_keys(const Json& j, const std::vector<std::string>& allowed,
                  const std::string& context);

} // namespace relflow

#endif
