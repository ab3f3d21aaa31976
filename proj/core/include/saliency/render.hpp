#pragma once

#include <string>
#include <vector>

#include "saliency/attribution.hpp"
#include "saliency/theory.hpp"

namespace saliency {

enum class HeatmapStyle { Diverging, AbsoluteValue };

/// Writes a heatmap image for a saliency map. Diverging emits binary PPM
/// (P6): positive scores shade red, negative shade blue, both against white,
/// normalized symmetrically by max |score| (all-zero maps come out white).
/// AbsoluteValue emits binary PGM (P5), |score| black-on-white. Rank-3 maps
/// (channels, h, w) are reduced by summing scores across channels first.
void render_heatmap(const SaliencyMap& map, HeatmapStyle style, const std::string& path);

/// Simple SVG line plot of the c1/c2 curves against delta, with stderr bars.
void write_theory_svg(const std::vector<std::pair<double, TheoryResult>>& rows,
                      const std::string& path);

} // namespace saliency
