#include "tvos/label_field.hpp"

#include <cmath>
#include <stdexcept>

namespace tvos {

void LabelField::set_one_hot(int y, int x, int cls) {
    double* p = cell(y, x);
    for (int c = 0; c < classes; ++c) p[c] = (c == cls) ? 1.0 : 0.0;
}

bool LabelField::simplex_valid(double tol) const {
    for (size_t i = 0; i < cells(); ++i) {
        const double* p = probs.data() + i * classes;
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) {
            if (!(p[c] >= 0.0)) return false;  // catches NaN too
            sum += p[c];
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

int LabelField::argmax_class(int y, int x) const {
    const double* p = cell(y, x);
    int best = 0;
    for (int c = 1; c < classes; ++c)
        if (p[c] > p[best]) best = c;
    return best;
}

LabelField permute_classes(const LabelField& field, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != field.classes)
        throw std::invalid_argument("permute_classes: permutation size mismatch");
    LabelField out(field.h, field.w, field.classes);
    for (size_t i = 0; i < field.cells(); ++i) {
        const double* src = field.probs.data() + i * field.classes;
        double* dst = out.probs.data() + i * field.classes;
        for (int c = 0; c < field.classes; ++c) dst[c] = src[perm[c]];
    }
    return out;
}

LabelField harden(const LabelField& field) {
    LabelField out(field.h, field.w, field.classes);
    for (int y = 0; y < field.h; ++y)
        for (int x = 0; x < field.w; ++x) out.set_one_hot(y, x, field.argmax_class(y, x));
    return out;
}

}  // namespace tvos
