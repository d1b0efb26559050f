#pragma once

#include <string>

#include "tvos/image.hpp"
#include "tvos/similarity.hpp"

namespace tvos {

/// Similarity-weighted expected displacement per cell, in cell units.
/// `valid` flags cells far enough from the border (>= 4 sigma when the
/// spatial prior is on) for the zero-mean symmetry argument to apply.
struct DisplacementField {
    int h = 0;
    int w = 0;
    std::vector<double> dx;
    std::vector<double> dy;
    std::vector<uint8_t> valid;

    size_t index(int y, int x) const { return static_cast<size_t>(y) * w + x; }
};

/// Expected motion at each cell of the later frame: the row-normalized
/// similarity over all cells of the earlier frame, contracted with the
/// cell displacement loc(target) - loc(reference). With use_spatial the
/// weights include the local-sigma Gaussian; without it they are appearance
/// only (and every cell is flagged valid).
DisplacementField displacement_field(const FeatureGrid& features_t, const FeatureGrid& features_t1,
                                     const SpatialParams& p, bool use_spatial = true);

/// Plain-text export: header "h w", then per-cell "dx dy" rows, row-major.
/// Values are in cell units; multiply by the grid stride for pixels.
void write_flow_text(const std::string& path, const DisplacementField& field);
DisplacementField read_flow_text(const std::string& path);

/// Color-wheel rendering (hue = direction, saturation = magnitude) for
/// visual inspection.
ImageU8 flow_to_color(const DisplacementField& field);

}  // namespace tvos
