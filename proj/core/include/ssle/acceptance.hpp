#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ssle {

/// Ids of every acceptance criterion, in execution order.
std::vector<std::string> acceptance_ids();

/// Runs the acceptance criteria whose ids appear in the comma-separated
/// `filter` (all when empty). Prints one PASS/FAIL line per criterion to
/// `log` and returns the machine-readable report. Unknown ids throw
/// std::invalid_argument.
nlohmann::json run_acceptance(const std::string& filter, std::ostream& log);

/// Indices of interior local maxima (a rise followed by a non-increase, with
/// plateaus reported once at their left end) whose value is at least
/// `rel_floor` times the global maximum.
std::vector<std::size_t> local_maxima(const std::vector<double>& values, double rel_floor);

}  // namespace ssle
