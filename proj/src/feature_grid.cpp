#include "tvos/feature_grid.hpp"

#include <cmath>

namespace tvos {

void FeatureGrid::normalize_cells() {
    for (size_t i = 0; i < cells(); ++i) {
        float* v = data.data() + i * c;
        double sq = 0.0;
        for (int k = 0; k < c; ++k) sq += static_cast<double>(v[k]) * v[k];
        if (sq <= 0.0) {
            v[0] = 1.f;
            for (int k = 1; k < c; ++k) v[k] = 0.f;
            continue;
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (int k = 0; k < c; ++k) v[k] = static_cast<float>(v[k] * inv);
    }
}

bool FeatureGrid::cells_unit_norm(double tol) const {
    for (size_t i = 0; i < cells(); ++i) {
        const float* v = data.data() + i * c;
        double sq = 0.0;
        for (int k = 0; k < c; ++k) {
            if (!std::isfinite(v[k])) return false;
            sq += static_cast<double>(v[k]) * v[k];
        }
        if (std::abs(std::sqrt(sq) - 1.0) > tol) return false;
    }
    return true;
}

}  // namespace tvos
