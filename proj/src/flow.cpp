#include "tvos/flow.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tvos {

DisplacementField displacement_field(const FeatureGrid& features_t, const FeatureGrid& features_t1,
                                     const SpatialParams& p, bool use_spatial) {
    if (features_t.h != features_t1.h || features_t.w != features_t1.w ||
        features_t.c != features_t1.c)
        throw std::invalid_argument("displacement_field: grid mismatch");

    SpatialParams params = p;
    if (!use_spatial) {
        params.sigma_local = std::numeric_limits<double>::infinity();
        params.sigma_in_pixels = false;
    }
    const std::vector<ReferenceFrameView> refs = {{&features_t, SigmaClass::local}};

    DisplacementField field;
    field.h = features_t1.h;
    field.w = features_t1.w;
    field.dx.assign(features_t1.cells(), 0.0);
    field.dy.assign(features_t1.cells(), 0.0);
    field.valid.assign(features_t1.cells(), 1);

    const int margin = use_spatial
                           ? static_cast<int>(std::ceil(4.0 * params.sigma_for(SigmaClass::local,
                                                                               features_t1.stride)))
                           : 0;

    std::vector<double> weights;
    for (int ty = 0; ty < field.h; ++ty) {
        for (int tx = 0; tx < field.w; ++tx) {
            row_weights(features_t1, ty, tx, refs, params, weights);
            double ex = 0.0, ey = 0.0;
            size_t idx = 0;
            for (int y = 0; y < features_t.h; ++y) {
                for (int x = 0; x < features_t.w; ++x, ++idx) {
                    ex += weights[idx] * static_cast<double>(tx - x);
                    ey += weights[idx] * static_cast<double>(ty - y);
                }
            }
            const size_t i = field.index(ty, tx);
            field.dx[i] = ex;
            field.dy[i] = ey;
            field.valid[i] = (ty >= margin && ty < field.h - margin && tx >= margin &&
                              tx < field.w - margin)
                                 ? 1
                                 : 0;
        }
    }
    return field;
}

void write_flow_text(const std::string& path, const DisplacementField& field) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << field.h << " " << field.w << "\n";
    out.precision(9);
    for (int y = 0; y < field.h; ++y)
        for (int x = 0; x < field.w; ++x)
            out << field.dx[field.index(y, x)] << " " << field.dy[field.index(y, x)] << "\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

DisplacementField read_flow_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    DisplacementField field;
    if (!(in >> field.h >> field.w) || field.h < 1 || field.w < 1)
        throw std::runtime_error(path + ": bad flow header");
    field.dx.resize(static_cast<size_t>(field.h) * field.w);
    field.dy.resize(field.dx.size());
    field.valid.assign(field.dx.size(), 1);
    for (size_t i = 0; i < field.dx.size(); ++i)
        if (!(in >> field.dx[i] >> field.dy[i]))
            throw std::runtime_error(path + ": truncated flow payload");
    return field;
}

ImageU8 flow_to_color(const DisplacementField& field) {
    double max_mag = 0.0;
    for (size_t i = 0; i < field.dx.size(); ++i)
        max_mag = std::max(max_mag, std::hypot(field.dx[i], field.dy[i]));
    if (max_mag <= 0.0) max_mag = 1.0;

    ImageU8 img(field.h, field.w, 3);
    for (int y = 0; y < field.h; ++y) {
        for (int x = 0; x < field.w; ++x) {
            const size_t i = field.index(y, x);
            const double mag = std::hypot(field.dx[i], field.dy[i]) / max_mag;
            const double angle = std::atan2(field.dy[i], field.dx[i]);  // [-pi, pi]
            const double hue = (angle + M_PI) / (2.0 * M_PI) * 6.0;
            const int sector = std::min(static_cast<int>(hue), 5);
            const double f = hue - sector;
            const double q = 1.0 - mag * f;
            const double t = 1.0 - mag * (1.0 - f);
            const double v = 1.0, pl = 1.0 - mag;
            double r = v, g = v, b = v;
            switch (sector) {
                case 0: r = v; g = t; b = pl; break;
                case 1: r = q; g = v; b = pl; break;
                case 2: r = pl; g = v; b = t; break;
                case 3: r = pl; g = q; b = v; break;
                case 4: r = t; g = pl; b = v; break;
                default: r = v; g = pl; b = q; break;
            }
            img.at(y, x, 0) = static_cast<uint8_t>(std::lround(r * 255.0));
            img.at(y, x, 1) = static_cast<uint8_t>(std::lround(g * 255.0));
            img.at(y, x, 2) = static_cast<uint8_t>(std::lround(b * 255.0));
        }
    }
    return img;
}

}  // namespace tvos
