#pragma once

// Desk-scale figure reproductions written as CSV.

#include <ostream>
#include <string>
#include <vector>

#include "wtdiag/config.hpp"

namespace wtdiag::cli {

std::vector<std::string> figure_ids();

/// One-line description of a figure's CSV, listed by `reproduce --list`.
std::string figure_description(const std::string& id);

/// Writes the figure's CSV to `csv`; progress goes to `log`. `grid` is used
/// by the n_TR sweep figures.
void reproduce(const std::string& id, const RunConfig& cfg, const std::vector<std::size_t>& grid,
               std::ostream& csv, std::ostream& log);

}  // namespace wtdiag::cli
