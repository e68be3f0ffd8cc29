#pragma once

#include <string>
#include <vector>

#include "rsflow/flow.hpp"

namespace rsflow {

/// Profile curve psi(s) of one slice as a standalone SVG document.
std::string profile_svg(const WarpedMetric& g, const std::string& title);

/// Two stacked panels over time: min psi (linear axis) and max |K| (log axis).
std::string summary_svg(const std::vector<StepDiagnostics>& rows, const std::string& title);

}  // namespace rsflow
