#include "tvos/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvos {

HistoryBank::HistoryBank(int capacity, bool pin_first) : capacity_(capacity), pin_first_(pin_first) {
    if (capacity < 1) throw std::invalid_argument("HistoryBank: capacity must be >= 1");
}

void HistoryBank::push(int frame_index, FeatureGrid features, LabelField field) {
    if (!entries_.empty() && frame_index <= entries_.back().frame_index)
        throw std::invalid_argument("HistoryBank: frames must arrive in increasing order");
    entries_.push_back({frame_index, std::move(features), std::move(field)});
    if (static_cast<int>(entries_.size()) > capacity_) {
        if (pin_first_ && entries_.front().frame_index == 0 && !pinned_)
            pinned_ = std::move(entries_.front());
        entries_.pop_front();
    }
}

const HistoryBank::Entry* HistoryBank::find(int frame_index) const {
    if (pinned_ && pinned_->frame_index == frame_index) return &*pinned_;
    for (const Entry& e : entries_)
        if (e.frame_index == frame_index) return &e;
    return nullptr;
}

int HistoryBank::size() const { return static_cast<int>(entries_.size()) + (pinned_ ? 1 : 0); }

LabelField init_from_annotation(const MaskU8& mask, int stride, int num_classes) {
    if (mask.empty()) throw std::invalid_argument("init_from_annotation: empty mask");
    if (stride < 1) throw std::invalid_argument("init_from_annotation: stride must be >= 1");

    const MaskU8 padded = pad_to_stride(mask, stride);
    const int k = (num_classes > 0) ? num_classes : max_label(mask) + 1;
    if (max_label(mask) >= k)
        throw std::invalid_argument("init_from_annotation: mask value exceeds class count");

    LabelField field(padded.h / stride, padded.w / stride, k);
    std::vector<int> counts(k);
    for (int cy = 0; cy < field.h; ++cy) {
        for (int cx = 0; cx < field.w; ++cx) {
            std::fill(counts.begin(), counts.end(), 0);
            for (int y = cy * stride; y < (cy + 1) * stride; ++y)
                for (int x = cx * stride; x < (cx + 1) * stride; ++x) ++counts[padded.at(y, x)];
            int best = 0;
            for (int c = 1; c < k; ++c)
                if (counts[c] > counts[best]) best = c;  // strict: ties keep the lowest id
            field.set_one_hot(cy, cx, best);
        }
    }
    return field;
}

namespace {

struct GatheredRefs {
    std::vector<ReferenceFrameView> views;
    std::vector<const LabelField*> fields;
};

GatheredRefs gather_references(const HistoryBank& bank, int t, const PropagationConfig& cfg) {
    const ReferenceSet refs = select_references(t, cfg.strategy);
    GatheredRefs out;
    for (const ReferenceSpec& r : refs) {
        const HistoryBank::Entry* e = bank.find(r.frame_index);
        if (!e)
            throw std::runtime_error("propagation: reference frame " + std::to_string(r.frame_index) +
                                     " missing from the history bank");
        out.views.push_back({&e->features, r.sigma_class});
        out.fields.push_back(&e->field);
    }
    return out;
}

}  // namespace

LabelField propagate_frame(const HistoryBank& bank, int t, const FeatureGrid& target_features,
                           const PropagationConfig& cfg) {
    const GatheredRefs refs = gather_references(bank, t, cfg);
    const int classes = refs.fields.front()->classes;
    for (size_t i = 0; i < refs.views.size(); ++i) {
        if (refs.views[i].features->h != target_features.h ||
            refs.views[i].features->w != target_features.w ||
            refs.views[i].features->c != target_features.c)
            throw std::invalid_argument("propagate_frame: reference grid dims mismatch");
        if (refs.fields[i]->classes != classes)
            throw std::invalid_argument("propagate_frame: reference class count mismatch");
    }

    LabelField out(target_features.h, target_features.w, classes);
    std::vector<double> weights;
    for (int ty = 0; ty < target_features.h; ++ty) {
        for (int tx = 0; tx < target_features.w; ++tx) {
            row_weights(target_features, ty, tx, refs.views, cfg.spatial, weights);
            double* dst = out.cell(ty, tx);
            size_t idx = 0;
            for (const LabelField* f : refs.fields) {
                for (size_t cell = 0; cell < f->cells(); ++cell, ++idx) {
                    const double wgt = weights[idx];
                    const double* src = f->probs.data() + cell * classes;
                    for (int c = 0; c < classes; ++c) dst[c] += wgt * src[c];
                }
            }
        }
    }
    return out;
}

double frame_energy(const HistoryBank& bank, int t, const LabelField& field,
                    const PropagationConfig& cfg) {
    cfg.spatial.validate();
    const HistoryBank::Entry* target = bank.find(t);
    if (!target)
        throw std::runtime_error("frame_energy: target frame " + std::to_string(t) +
                                 " not in the history bank");
    const FeatureGrid& tf = target->features;
    if (field.h != tf.h || field.w != tf.w)
        throw std::invalid_argument("frame_energy: field dims do not match the target grid");

    const GatheredRefs refs = gather_references(bank, t, cfg);
    for (const LabelField* f : refs.fields)
        if (f->classes != field.classes)
            throw std::invalid_argument("frame_energy: reference class count mismatch");
    const size_t n_targets = field.cells();
    size_t n_refs = 0;
    for (const auto& v : refs.views) n_refs += v.features->cells();
    if (n_targets == 0 || n_refs == 0) return 0.0;

    // Pass 1: un-normalized affinities and bipartite degrees.
    std::vector<double> w_all(n_targets * n_refs);
    std::vector<double> deg_t(n_targets, 0.0), deg_r(n_refs, 0.0);
    for (int ty = 0; ty < field.h; ++ty) {
        for (int tx = 0; tx < field.w; ++tx) {
            const size_t it = static_cast<size_t>(ty) * field.w + tx;
            size_t jr = 0;
            for (const auto& view : refs.views) {
                const FeatureGrid& g = *view.features;
                const double sigma = cfg.spatial.sigma_for(view.sigma_class, tf.stride);
                for (int y = 0; y < g.h; ++y) {
                    for (int x = 0; x < g.w; ++x, ++jr) {
                        const double w = pair_affinity(tf.cell(ty, tx), g.cell(y, x), tf.c,
                                                       {tx, ty}, {x, y}, sigma, cfg.spatial.temperature);
                        w_all[it * n_refs + jr] = w;
                        deg_t[it] += w;
                        deg_r[jr] += w;
                    }
                }
            }
        }
    }

    // Pass 2: smoothness between degree-normalized soft labels.
    const int classes = field.classes;
    std::vector<const double*> ref_cells(n_refs);
    {
        size_t jr = 0;
        for (const LabelField* f : refs.fields)
            for (size_t cell = 0; cell < f->cells(); ++cell, ++jr)
                ref_cells[jr] = f->probs.data() + cell * classes;
    }
    double total = 0.0;
    for (size_t it = 0; it < n_targets; ++it) {
        const double* yt = field.probs.data() + it * classes;
        const double inv_t = deg_t[it] > 0.0 ? 1.0 / std::sqrt(deg_t[it]) : 0.0;
        for (size_t jr = 0; jr < n_refs; ++jr) {
            const double w = w_all[it * n_refs + jr];
            if (w == 0.0) continue;
            const double inv_r = deg_r[jr] > 0.0 ? 1.0 / std::sqrt(deg_r[jr]) : 0.0;
            const double* yr = ref_cells[jr];
            double sq = 0.0;
            for (int c = 0; c < classes; ++c) {
                const double diff = yt[c] * inv_t - yr[c] * inv_r;
                sq += diff * diff;
            }
            total += w * sq;
        }
    }
    return total;
}

MaskU8 to_mask(const LabelField& field, int out_h, int out_w) {
    if (out_h < field.h || out_w < field.w)
        throw std::invalid_argument("to_mask: output dims smaller than the grid");

    const double sy = static_cast<double>(field.h) / out_h;
    const double sx = static_cast<double>(field.w) / out_w;
    MaskU8 mask(out_h, out_w);
    std::vector<double> acc(field.classes);
    for (int y = 0; y < out_h; ++y) {
        const double v = (y + 0.5) * sy - 0.5;
        const double vc = std::min(std::max(v, 0.0), static_cast<double>(field.h - 1));
        const int y0 = static_cast<int>(std::floor(vc));
        const int y1 = std::min(y0 + 1, field.h - 1);
        const double fy = vc - y0;
        for (int x = 0; x < out_w; ++x) {
            const double u = (x + 0.5) * sx - 0.5;
            const double uc = std::min(std::max(u, 0.0), static_cast<double>(field.w - 1));
            const int x0 = static_cast<int>(std::floor(uc));
            const int x1 = std::min(x0 + 1, field.w - 1);
            const double fx = uc - x0;

            const double* p00 = field.cell(y0, x0);
            const double* p01 = field.cell(y0, x1);
            const double* p10 = field.cell(y1, x0);
            const double* p11 = field.cell(y1, x1);
            int best = 0;
            for (int c = 0; c < field.classes; ++c) {
                acc[c] = (1 - fy) * ((1 - fx) * p00[c] + fx * p01[c]) +
                         fy * ((1 - fx) * p10[c] + fx * p11[c]);
                if (acc[c] > acc[best]) best = c;
            }
            mask.at(y, x) = static_cast<uint8_t>(best);
        }
    }
    return mask;
}

SequenceResult run_sequence(const FrameSource& frames, const MaskU8& first_mask,
                            const PropagationConfig& cfg, const EmbeddingProvider& provider) {
    if (frames.size() < 1) throw std::invalid_argument("run_sequence: empty sequence");
    cfg.strategy.validate();
    cfg.spatial.validate();

    const ImageU8 first = frames.frame(0);
    if (first.h != first_mask.h || first.w != first_mask.w)
        throw std::invalid_argument("run_sequence: first mask dims do not match frame 0");

    const int num_classes = max_label(first_mask) + 1;
    // Window 40 plus one slot of slack by default; deeper look-backs get a
    // matching capacity so no demanded reference is ever evicted.
    int depth = 1;
    switch (cfg.strategy.kind) {
        case SamplingStrategy::Kind::previous: depth = 1; break;
        case SamplingStrategy::Kind::consecutive: depth = cfg.strategy.count; break;
        case SamplingStrategy::Kind::uniform:
        case SamplingStrategy::Kind::sparse_dense: depth = cfg.strategy.window; break;
    }
    HistoryBank bank(std::max(41, depth + 1), cfg.strategy.include_first_frame);

    SequenceResult result;
    result.masks.reserve(frames.size());
    result.fields.reserve(frames.size());

    for (int t = 0; t < frames.size(); ++t) {
        ImageU8 frame = (t == 0) ? first : frames.frame(t);
        if (frame.h != first.h || frame.w != first.w)
            throw std::runtime_error("run_sequence: frame " + std::to_string(t) +
                                     " dims differ from frame 0");
        FeatureGrid features;
        try {
            features = provider.embed(frame, t, cfg.stride);
        } catch (const std::exception& e) {
            throw std::runtime_error("run_sequence: embedding provider failed at frame " +
                                     std::to_string(t) + ": " + e.what());
        }

        if (t == 0) {
            LabelField field = init_from_annotation(first_mask, cfg.stride, num_classes);
            result.masks.push_back(first_mask);
            result.fields.push_back(field);
            bank.push(0, std::move(features), std::move(field));
            continue;
        }

        LabelField field = propagate_frame(bank, t, features, cfg);
        MaskU8 mask = crop(to_mask(field, padded_extent(first.h, cfg.stride),
                                   padded_extent(first.w, cfg.stride)),
                           first.h, first.w);
        result.masks.push_back(std::move(mask));
        result.fields.push_back(field);
        bank.push(t, std::move(features), cfg.harden_history ? harden(field) : std::move(field));
    }
    return result;
}

}  // namespace tvos
