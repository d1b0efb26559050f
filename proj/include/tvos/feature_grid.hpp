#pragma once

#include <vector>

namespace tvos {

/// Integer cell coordinates on the stride grid.
struct CellLocation {
    int x = 0;
    int y = 0;
};

/// Per-frame embedding field at a fixed stride over the image.
/// One `c`-dim vector per cell, stored (y, x, channel) row-major.
/// Cell vectors are unit Euclidean norm once `normalize_cells` has run.
struct FeatureGrid {
    int h = 0;
    int w = 0;
    int c = 0;
    int stride = 1;
    std::vector<float> data;

    FeatureGrid() = default;
    FeatureGrid(int height, int width, int channels, int grid_stride)
        : h(height), w(width), c(channels), stride(grid_stride),
          data(static_cast<size_t>(height) * width * channels, 0.f) {}

    float* cell(int y, int x) { return data.data() + (static_cast<size_t>(y) * w + x) * c; }
    const float* cell(int y, int x) const {
        return data.data() + (static_cast<size_t>(y) * w + x) * c;
    }
    size_t cells() const { return static_cast<size_t>(h) * w; }

    /// Rescales every cell vector to unit norm. An exactly zero cell becomes e1.
    void normalize_cells();

    /// True when every cell norm is within `tol` of 1 and all entries are finite.
    bool cells_unit_norm(double tol = 1e-5) const;
};

}  // namespace tvos
