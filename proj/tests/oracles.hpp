#pragma once

// Independent reference implementations used only to cross-check the engine.
// These deliberately avoid the library's numeric shortcuts: no log-space
// shifts, extended precision accumulation, all-pairs distance scans.

#include <cmath>
#include <random>
#include <vector>

#include "tvos/feature_grid.hpp"
#include "tvos/image.hpp"
#include "tvos/label_field.hpp"
#include "tvos/sampling.hpp"
#include "tvos/similarity.hpp"
#include "tvos/training.hpp"

namespace oracles {

struct NaiveRef {
    const tvos::FeatureGrid* features;
    tvos::SigmaClass sigma_class;
    const tvos::LabelField* field;
};

// Quadruple-loop diffusion in long double, direct exponentials.
inline tvos::LabelField naive_propagate(const tvos::FeatureGrid& target,
                                        const std::vector<NaiveRef>& refs,
                                        const tvos::SpatialParams& p) {
    const int classes = refs.front().field->classes;
    tvos::LabelField out(target.h, target.w, classes);
    std::vector<long double> num(classes);
    for (int ty = 0; ty < target.h; ++ty) {
        for (int tx = 0; tx < target.w; ++tx) {
            std::fill(num.begin(), num.end(), 0.0L);
            long double den = 0.0L;
            for (const NaiveRef& r : refs) {
                const long double sigma = p.sigma_for(r.sigma_class, target.stride);
                for (int y = 0; y < r.features->h; ++y) {
                    for (int x = 0; x < r.features->w; ++x) {
                        long double dot = 0.0L;
                        const float* a = target.cell(ty, tx);
                        const float* b = r.features->cell(y, x);
                        for (int k = 0; k < target.c; ++k)
                            dot += static_cast<long double>(a[k]) * b[k];
                        const long double dx = tx - x, dy = ty - y;
                        const long double w = std::exp(dot / static_cast<long double>(p.temperature)) *
                                              std::exp(-(dx * dx + dy * dy) / (sigma * sigma));
                        den += w;
                        const double* lab = r.field->cell(y, x);
                        for (int c = 0; c < classes; ++c) num[c] += w * lab[c];
                    }
                }
            }
            double* dst = out.cell(ty, tx);
            for (int c = 0; c < classes; ++c) dst[c] = static_cast<double>(num[c] / den);
        }
    }
    return out;
}

// All-pairs boundary matching with its own boundary extraction.
inline double exhaustive_boundary_f(const tvos::MaskU8& pred, const tvos::MaskU8& gt, int object_id,
                                    double tolerance_frac = 0.008) {
    auto extract = [&](const tvos::MaskU8& m) {
        std::vector<std::pair<int, int>> pts;
        for (int y = 0; y < m.h; ++y)
            for (int x = 0; x < m.w; ++x) {
                if (m.at(y, x) != object_id) continue;
                const bool interior = y > 0 && m.at(y - 1, x) == object_id && y + 1 < m.h &&
                                      m.at(y + 1, x) == object_id && x > 0 &&
                                      m.at(y, x - 1) == object_id && x + 1 < m.w &&
                                      m.at(y, x + 1) == object_id;
                if (!interior) pts.emplace_back(y, x);
            }
        return pts;
    };
    const auto pb = extract(pred);
    const auto gb = extract(gt);
    if (pb.empty() && gb.empty()) return 1.0;
    if (pb.empty() || gb.empty()) return 0.0;

    const double diag = std::sqrt(static_cast<double>(pred.h) * pred.h +
                                  static_cast<double>(pred.w) * pred.w);
    const long r = static_cast<long>(std::ceil(tolerance_frac * diag));
    const long r_sq = r * r;
    auto matched = [&](const std::vector<std::pair<int, int>>& from,
                       const std::vector<std::pair<int, int>>& to) {
        size_t hits = 0;
        for (const auto& [ay, ax] : from) {
            for (const auto& [by, bx] : to) {
                const long dy = ay - by, dx = ax - bx;
                if (dy * dy + dx * dx <= r_sq) {
                    ++hits;
                    break;
                }
            }
        }
        return hits;
    };
    const double precision = static_cast<double>(matched(pb, gb)) / pb.size();
    const double recall = static_cast<double>(matched(gb, pb)) / gb.size();
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

// Central finite differences of the training loss through the head. The
// forward pass is re-implemented here in double precision end-to-end (the
// production FeatureGrid path would quantize embeddings to float and poison
// the difference quotient).
inline tvos::HeadGradient fd_head_gradient(const tvos::FeatureGrid& target_base,
                                           const std::vector<tvos::TrainReference>& refs,
                                           const tvos::ProjectionHead& head,
                                           const tvos::LabelField& gt, double temperature,
                                           double eps = 1e-4) {
    const int co = head.c_out;
    auto project = [&](const tvos::ProjectionHead& h, const float* base, std::vector<double>& out) {
        out.assign(co, 0.0);
        for (int o = 0; o < co; ++o) out[o] = h.bias[o];
        for (int i = 0; i < h.c_in; ++i)
            for (int o = 0; o < co; ++o) out[o] += static_cast<double>(base[i]) * h.weight[i * co + o];
        double sq = 0.0;
        for (double v : out) sq += v * v;
        if (sq <= 0.0) {
            out.assign(co, 0.0);
            out[0] = 1.0;
            return;
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (double& v : out) v *= inv;
    };

    auto loss_at = [&](const tvos::ProjectionHead& h) {
        std::vector<std::vector<double>> ref_emb;
        std::vector<const double*> ref_label;
        const int classes = refs.front().field->classes;
        for (const tvos::TrainReference& r : refs) {
            for (size_t cell = 0; cell < r.features->cells(); ++cell) {
                std::vector<double> emb;
                project(h, r.features->data.data() + cell * h.c_in, emb);
                ref_emb.push_back(std::move(emb));
                ref_label.push_back(r.field->probs.data() + cell * classes);
            }
        }
        double loss = 0.0;
        std::vector<double> t_emb, logits(ref_emb.size());
        for (size_t it = 0; it < target_base.cells(); ++it) {
            project(h, target_base.data.data() + it * h.c_in, t_emb);
            double mx = -1e300;
            for (size_t j = 0; j < ref_emb.size(); ++j) {
                double dot = 0.0;
                for (int k = 0; k < co; ++k) dot += t_emb[k] * ref_emb[j][k];
                logits[j] = dot / temperature;
                mx = std::max(mx, logits[j]);
            }
            double denom = 0.0;
            for (double& v : logits) {
                v = std::exp(v - mx);
                denom += v;
            }
            const double* g = gt.probs.data() + it * classes;
            int cls = 0;
            for (int c = 1; c < classes; ++c)
                if (g[c] > g[cls]) cls = c;
            double p = 0.0;
            for (size_t j = 0; j < ref_emb.size(); ++j) p += logits[j] / denom * ref_label[j][cls];
            loss -= std::log(std::max(p, 1e-12));
        }
        return loss;
    };

    tvos::HeadGradient g;
    g.d_weight.resize(head.weight.size());
    g.d_bias.resize(head.bias.size());
    tvos::ProjectionHead probe = head;
    for (size_t i = 0; i < head.weight.size(); ++i) {
        probe.weight[i] = head.weight[i] + eps;
        const double up = loss_at(probe);
        probe.weight[i] = head.weight[i] - eps;
        const double down = loss_at(probe);
        probe.weight[i] = head.weight[i];
        g.d_weight[i] = (up - down) / (2.0 * eps);
    }
    for (size_t i = 0; i < head.bias.size(); ++i) {
        probe.bias[i] = head.bias[i] + eps;
        const double up = loss_at(probe);
        probe.bias[i] = head.bias[i] - eps;
        const double down = loss_at(probe);
        probe.bias[i] = head.bias[i];
        g.d_bias[i] = (up - down) / (2.0 * eps);
    }
    g.loss = loss_at(head);
    return g;
}

// Relative error with a unit floor, elementwise max over both gradients.
inline double gradient_rel_error(const tvos::HeadGradient& a, const tvos::HeadGradient& b) {
    double worst = 0.0;
    auto update = [&](double x, double y) {
        const double denom = std::max({1.0, std::abs(x), std::abs(y)});
        worst = std::max(worst, std::abs(x - y) / denom);
    };
    for (size_t i = 0; i < a.d_weight.size(); ++i) update(a.d_weight[i], b.d_weight[i]);
    for (size_t i = 0; i < a.d_bias.size(); ++i) update(a.d_bias[i], b.d_bias[i]);
    return worst;
}

inline tvos::FeatureGrid random_unit_grid(int h, int w, int c, int stride, std::mt19937& rng) {
    tvos::FeatureGrid g(h, w, c, stride);
    std::normal_distribution<float> dist(0.f, 1.f);
    for (float& v : g.data) v = dist(rng);
    g.normalize_cells();
    return g;
}

inline tvos::LabelField random_simplex_field(int h, int w, int classes, std::mt19937& rng) {
    tvos::LabelField f(h, w, classes);
    std::uniform_real_distribution<double> dist(0.01, 1.0);
    for (size_t i = 0; i < f.cells(); ++i) {
        double* p = f.probs.data() + i * classes;
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) {
            p[c] = dist(rng);
            sum += p[c];
        }
        for (int c = 0; c < classes; ++c) p[c] /= sum;
    }
    return f;
}

inline tvos::LabelField random_one_hot_field(int h, int w, int classes, std::mt19937& rng) {
    tvos::LabelField f(h, w, classes);
    std::uniform_int_distribution<int> dist(0, classes - 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.set_one_hot(y, x, dist(rng));
    return f;
}

}  // namespace oracles
