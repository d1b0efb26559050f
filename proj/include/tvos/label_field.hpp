#pragma once

#include <vector>

namespace tvos {

/// Per-cell probability simplex over (background + K objects) at grid scale.
/// Class 0 is background. Stored (y, x, class) row-major.
struct LabelField {
    int h = 0;
    int w = 0;
    int classes = 0;  // K + 1
    std::vector<double> probs;

    LabelField() = default;
    LabelField(int height, int width, int class_count)
        : h(height), w(width), classes(class_count),
          probs(static_cast<size_t>(height) * width * class_count, 0.0) {}

    double* cell(int y, int x) { return probs.data() + (static_cast<size_t>(y) * w + x) * classes; }
    const double* cell(int y, int x) const {
        return probs.data() + (static_cast<size_t>(y) * w + x) * classes;
    }
    size_t cells() const { return static_cast<size_t>(h) * w; }

    /// Sets a cell to the one-hot vector for `cls`.
    void set_one_hot(int y, int x, int cls);

    /// True when every cell is non-negative and sums to 1 within `tol`.
    bool simplex_valid(double tol = 1e-5) const;

    /// Per-cell argmax with ties broken toward the lowest class id.
    int argmax_class(int y, int x) const;
};

/// Reorders class channels: out[c] = in[perm[c]]. `perm` has `classes` entries.
LabelField permute_classes(const LabelField& field, const std::vector<int>& perm);

/// One-hot field from per-cell argmax (lowest-id ties).
LabelField harden(const LabelField& field);

}  // namespace tvos
