#include "tvos/similarity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvos {

void SpatialParams::validate() const {
    if (!(sigma_local > 0.0)) throw std::invalid_argument("SpatialParams: sigma_local must be positive");
    if (!(sigma_distant > 0.0)) throw std::invalid_argument("SpatialParams: sigma_distant must be positive");
    if (!(temperature > 0.0)) throw std::invalid_argument("SpatialParams: temperature must be positive");
    if (window_radius && *window_radius < 0)
        throw std::invalid_argument("SpatialParams: window_radius must be non-negative");
}

double SpatialParams::sigma_for(SigmaClass cls, int stride) const {
    const double sigma = (cls == SigmaClass::local) ? sigma_local : sigma_distant;
    return sigma_in_pixels ? sigma / stride : sigma;
}

double pair_affinity(const float* f_i, const float* f_j, int channels, CellLocation loc_i,
                     CellLocation loc_j, double sigma, double temperature) {
    double dot = 0.0;
    for (int k = 0; k < channels; ++k) dot += static_cast<double>(f_i[k]) * f_j[k];
    const double dx = loc_i.x - loc_j.x;
    const double dy = loc_i.y - loc_j.y;
    return std::exp(dot / temperature) * std::exp(-(dx * dx + dy * dy) / (sigma * sigma));
}

namespace {

size_t total_reference_cells(const std::vector<ReferenceFrameView>& refs) {
    size_t n = 0;
    for (const auto& r : refs) n += r.features->cells();
    return n;
}

void check_refs(const FeatureGrid& targets, const std::vector<ReferenceFrameView>& refs) {
    if (refs.empty()) throw std::invalid_argument("similarity: empty reference set");
    for (const auto& r : refs) {
        if (r.features == nullptr) throw std::invalid_argument("similarity: null reference grid");
        if (r.features->c != targets.c)
            throw std::invalid_argument("similarity: reference channel count mismatch");
    }
}

}  // namespace

void row_weights(const FeatureGrid& targets, int ty, int tx,
                 const std::vector<ReferenceFrameView>& refs, const SpatialParams& p,
                 std::vector<double>& out) {
    p.validate();
    check_refs(targets, refs);

    out.assign(total_reference_cells(refs), 0.0);
    const float* f_t = targets.cell(ty, tx);
    const double radius_sq = p.window_radius
                                 ? static_cast<double>(*p.window_radius) * *p.window_radius
                                 : std::numeric_limits<double>::infinity();

    // Pass 1: logits and the row max (excluded pairs stay at -inf).
    constexpr double kExcluded = -std::numeric_limits<double>::infinity();
    double max_logit = kExcluded;
    size_t idx = 0;
    for (const auto& r : refs) {
        const FeatureGrid& g = *r.features;
        const double sigma = p.sigma_for(r.sigma_class, targets.stride);
        const double sigma_sq = sigma * sigma;
        for (int y = 0; y < g.h; ++y) {
            const double dy = static_cast<double>(ty - y);
            for (int x = 0; x < g.w; ++x, ++idx) {
                const double dx = static_cast<double>(tx - x);
                const double dist_sq = dx * dx + dy * dy;
                if (dist_sq > radius_sq) {
                    out[idx] = kExcluded;
                    continue;
                }
                const float* f_r = g.cell(y, x);
                double dot = 0.0;
                for (int k = 0; k < g.c; ++k) dot += static_cast<double>(f_t[k]) * f_r[k];
                const double logit = dot / p.temperature - dist_sq / sigma_sq;
                out[idx] = logit;
                if (logit > max_logit) max_logit = logit;
            }
        }
    }
    if (max_logit == kExcluded)
        throw std::invalid_argument("similarity: window_radius excluded every reference cell");

    // Pass 2: shifted exponentials and normalization, fixed summation order.
    double sum = 0.0;
    for (double& v : out) {
        v = (v == kExcluded) ? 0.0 : std::exp(v - max_logit);
        sum += v;
    }
    const double inv = 1.0 / sum;
    for (double& v : out) v *= inv;
}

RowWeights similarity_rows(const FeatureGrid& targets, const std::vector<ReferenceFrameView>& refs,
                           const SpatialParams& p) {
    RowWeights rw;
    rw.target_h = targets.h;
    rw.target_w = targets.w;
    rw.reference_cells = total_reference_cells(refs);
    rw.weights.resize(targets.cells() * rw.reference_cells);

    std::vector<double> row;
    for (int ty = 0; ty < targets.h; ++ty) {
        for (int tx = 0; tx < targets.w; ++tx) {
            row_weights(targets, ty, tx, refs, p, row);
            double* dst = rw.weights.data() +
                          (static_cast<size_t>(ty) * targets.w + tx) * rw.reference_cells;
            std::copy(row.begin(), row.end(), dst);
        }
    }
    return rw;
}

double truncated_equivalence_check(const FeatureGrid& targets,
                                   const std::vector<ReferenceFrameView>& refs,
                                   const SpatialParams& p) {
    if (!p.window_radius)
        throw std::invalid_argument("truncated_equivalence_check: window_radius must be set");
    SpatialParams exact = p;
    exact.window_radius.reset();

    const RowWeights truncated = similarity_rows(targets, refs, p);
    const RowWeights full = similarity_rows(targets, refs, exact);
    double max_diff = 0.0;
    for (size_t i = 0; i < full.weights.size(); ++i)
        max_diff = std::max(max_diff, std::abs(full.weights[i] - truncated.weights[i]));
    return max_diff;
}

}  // namespace tvos
