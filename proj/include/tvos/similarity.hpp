#pragma once

#include <optional>
#include <vector>

#include "tvos/feature_grid.hpp"
#include "tvos/sampling.hpp"

namespace tvos {

/// Knobs of the pairwise similarity: appearance sharpness and the two-scale
/// spatial locality prior. Sigmas are in feature-grid cells unless
/// sigma_in_pixels is set (then they are divided by the grid stride).
/// An infinite sigma disables the spatial term.
struct SpatialParams {
    double sigma_local = 8.0;
    double sigma_distant = 21.0;
    double temperature = 0.1;
    std::optional<int> window_radius;  // cells; pairs farther apart are dropped pre-normalization
    bool sigma_in_pixels = false;

    void validate() const;
    double sigma_for(SigmaClass cls, int stride) const;
};

/// A reference frame as the weight computation sees it: features plus the
/// sigma class its spatial prior uses.
struct ReferenceFrameView {
    const FeatureGrid* features = nullptr;
    SigmaClass sigma_class = SigmaClass::local;
};

/// Un-normalized pairwise similarity: exp(f_i . f_j / temperature) *
/// exp(-||loc_i - loc_j||^2 / sigma^2). Strictly positive for finite inputs.
double pair_affinity(const float* f_i, const float* f_j, int channels, CellLocation loc_i,
                     CellLocation loc_j, double sigma, double temperature);

/// Row-normalized weights of one target cell over every cell of every
/// reference frame, in (reference order, row-major cell) order. Computed in
/// log space with per-row max subtraction, so any finite features are safe.
/// With window_radius set, pairs beyond the radius are excluded before
/// normalization. Summation order is fixed, so results are reproducible.
void row_weights(const FeatureGrid& targets, int ty, int tx,
                 const std::vector<ReferenceFrameView>& refs, const SpatialParams& p,
                 std::vector<double>& out);

/// Dense weights for every target cell (small-grid / verification surface).
struct RowWeights {
    int target_h = 0;
    int target_w = 0;
    size_t reference_cells = 0;
    std::vector<double> weights;  // (target cell row-major, reference flat)

    const double* row(int ty, int tx) const {
        return weights.data() + (static_cast<size_t>(ty) * target_w + tx) * reference_cells;
    }
};

RowWeights similarity_rows(const FeatureGrid& targets, const std::vector<ReferenceFrameView>& refs,
                           const SpatialParams& p);

/// Max-abs weight discrepancy between the truncated and the exact rows.
/// `p.window_radius` must be set; the exact pass runs with it cleared.
double truncated_equivalence_check(const FeatureGrid& targets,
                                   const std::vector<ReferenceFrameView>& refs,
                                   const SpatialParams& p);

}  // namespace tvos
