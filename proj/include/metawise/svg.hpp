// Minimal standalone SVG emission for density figures: one polyline per
// group, an optional vertical line at the criterion value, and a short
// vertical hash on each curve at its group mean. Output is deterministic
// for a fixed input.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "metawise/stats.hpp"

namespace metawise {

struct DensityPlotGroup {
    std::string label;
    DensityCurve curve;
    double group_mean = 0.0;  // position of the mean hash, in curve coordinates
};

struct DensityPlotOptions {
    int width = 840;
    int height = 420;
    std::optional<double> criterion_line;  // omit for mean-centered figures
    std::string title;
};

std::string render_density_plot(const std::vector<DensityPlotGroup>& groups,
                                const DensityPlotOptions& options);

}  // namespace metawise
