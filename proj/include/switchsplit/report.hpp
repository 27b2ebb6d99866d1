#pragma once

#include <ostream>
#include <string>

#include "switchsplit/config.hpp"
#include "switchsplit/engine.hpp"

namespace switchsplit {

// Shortest exact decimal helper: %.17g, which round-trips any double.
std::string format_double(double x);

// One row per (cell, replicate): scheme, dynamics, replicate, seed,
// estimate, log_estimate, p_hat_1..p_hat_n, extinct_at; then one summary
// comment line per cell. Levels never run (post-extinction) print empty.
// Wall-clock times are deliberately absent: files must be byte-identical
// across reruns and thread counts.
void write_results_csv(std::ostream& out, const ComparisonReport& report, int n_levels);

// Same content as the CSV in a nested JSON document.
void write_results_json(std::ostream& out, const ComparisonReport& report, int n_levels);

// Full paths of final-level survivors, one row per grid point:
// scheme, dynamics, replicate, particle, point, time, x_1..x_d.
// Requires the report to have been produced with record_paths enabled.
void write_survivor_paths_csv(std::ostream& out, const ComparisonReport& report, int dim,
                              double step_h, double horizon_T);

}  // namespace switchsplit
