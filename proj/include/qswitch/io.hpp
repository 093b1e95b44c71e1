#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "qswitch/sim.hpp"

namespace qswitch {

inline constexpr const char* kToolVersion = "1.0.0";

/*
 * Scenario file (JSON). Clients and classes are 1-based.
 *
 *   {
 *     "name": "toy",
 *     "n_clients": 6, "n_memories": 3,
 *     "lle_success": 0.9,                     // or one value per client
 *     "request_classes": [[1,2,3], [1,2,4]],  // or "class_family" below
 *     "class_family": {"sizes": [2, 3], "count": 8},
 *     "direction": [1, 1],                    // optional, default uniform
 *     "intensity": 0.7,
 *     "policy": {"kind": "APPROX_MEW", "approx_budget": 10,
 *                "rng_seed": 0, "carry_over": false},   // default MEW
 *     "horizon": 20000, "replications": 10, "base_seed": 1,
 *     "certificate": "out/certificate.json"   // optional, relative to this file
 *   }
 *
 * "class_family" lists all client subsets of the given sizes, smaller sizes
 * first and lexicographic within a size, truncated to "count" if present.
 */
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json config_to_json(const SwitchConfig& config);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// FNV-1a 64 over the canonical JSON text of the config, as 16 hex digits.
std::string config_hash(const SwitchConfig& config);

/// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// "slot,mean_total_backlog,stderr" rows, slots 1-based, 6 decimals.
std::string trace_csv(const TrajectoryStats& stats);

/// Run metadata: everything needed to re-run bit-identically.
nlohmann::json experiment_metadata(const Scenario& scenario, const ExperimentResult& result);

struct ChartSeries {
    std::string label;
    std::vector<double> values;  // y per slot, slot = index + 1
};

/// Self-contained SVG line chart (axes, ticks, legend), no external assets.
std::string line_chart_svg(const std::string& title, const std::vector<ChartSeries>& series);

/// Fixed-format number rendering used by every artifact.
std::string format_fixed(double value, int decimals = 6);

}  // namespace qswitch
