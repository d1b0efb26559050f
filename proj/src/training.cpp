#include "tvos/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tvos/sampling.hpp"

namespace tvos {
namespace {

constexpr double kProbFloor = 1e-12;

struct FlatRefs {
    std::vector<const float*> cells;    // base or projected feature per cell
    std::vector<const double*> labels;  // simplex per cell
    int channels = 0;
    int classes = 0;
};

FlatRefs flatten(const std::vector<TrainReference>& refs, int want_channels) {
    if (refs.empty()) throw std::invalid_argument("training: empty reference set");
    FlatRefs flat;
    flat.channels = want_channels;
    flat.classes = refs.front().field->classes;
    for (const TrainReference& r : refs) {
        if (!r.features || !r.field) throw std::invalid_argument("training: null reference");
        if (r.features->c != want_channels)
            throw std::invalid_argument("training: reference channel count mismatch");
        if (r.field->classes != flat.classes)
            throw std::invalid_argument("training: reference class count mismatch");
        if (r.features->cells() != r.field->cells())
            throw std::invalid_argument("training: reference grid/field size mismatch");
        for (size_t i = 0; i < r.features->cells(); ++i) {
            flat.cells.push_back(r.features->data.data() + i * want_channels);
            flat.labels.push_back(r.field->probs.data() + i * flat.classes);
        }
    }
    return flat;
}

int one_hot_class(const double* p, int classes) {
    int best = 0;
    for (int c = 1; c < classes; ++c)
        if (p[c] > p[best]) best = c;
    if (std::abs(p[best] - 1.0) > 1e-9)
        throw std::invalid_argument("training: ground-truth field is not one-hot");
    return best;
}

// Softmax over precomputed logits, in place, log-space shifted.
void softmax_inplace(std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    const double inv = 1.0 / sum;
    for (double& v : logits) v *= inv;
}

}  // namespace

LabelField predict_train(const FeatureGrid& target_features,
                         const std::vector<TrainReference>& references, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("predict_train: temperature must be positive");
    const FlatRefs refs = flatten(references, target_features.c);

    LabelField out(target_features.h, target_features.w, refs.classes);
    std::vector<double> logits(refs.cells.size());
    for (size_t it = 0; it < target_features.cells(); ++it) {
        const float* f_t = target_features.data.data() + it * target_features.c;
        for (size_t j = 0; j < refs.cells.size(); ++j) {
            double dot = 0.0;
            for (int k = 0; k < refs.channels; ++k)
                dot += static_cast<double>(f_t[k]) * refs.cells[j][k];
            logits[j] = dot / temperature;
        }
        softmax_inplace(logits);
        double* dst = out.probs.data() + it * refs.classes;
        for (size_t j = 0; j < refs.cells.size(); ++j) {
            const double s = logits[j];
            const double* y = refs.labels[j];
            for (int c = 0; c < refs.classes; ++c) dst[c] += s * y[c];
        }
    }
    return out;
}

double training_loss(const LabelField& pred, const LabelField& gt) {
    if (pred.h != gt.h || pred.w != gt.w || pred.classes != gt.classes)
        throw std::invalid_argument("training_loss: grid mismatch");
    double loss = 0.0;
    for (size_t i = 0; i < pred.cells(); ++i) {
        const int cls = one_hot_class(gt.probs.data() + i * gt.classes, gt.classes);
        const double p = std::max(pred.probs[i * pred.classes + cls], kProbFloor);
        loss -= std::log(p);
    }
    return loss;
}

HeadGradient head_gradient(const FeatureGrid& target_base,
                           const std::vector<TrainReference>& reference_bases,
                           const ProjectionHead& head, const LabelField& gt, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("head_gradient: temperature must be positive");
    if (target_base.c != head.c_in)
        throw std::invalid_argument("head_gradient: head input dims do not match base features");
    if (gt.h != target_base.h || gt.w != target_base.w)
        throw std::invalid_argument("head_gradient: ground truth dims mismatch");
    const FlatRefs refs = flatten(reference_bases, head.c_in);

    const size_t n_t = target_base.cells();
    const size_t n_r = refs.cells.size();
    const int co = head.c_out;

    // Forward pass through the head for both sides, keeping pre-norm vectors.
    std::vector<double> t_proj(n_t * co), t_emb(n_t * co);
    std::vector<double> r_proj(n_r * co), r_emb(n_r * co);
    for (size_t i = 0; i < n_t; ++i)
        head.apply_cell(target_base.data.data() + i * head.c_in, t_proj.data() + i * co,
                        t_emb.data() + i * co);
    for (size_t j = 0; j < n_r; ++j)
        head.apply_cell(refs.cells[j], r_proj.data() + j * co, r_emb.data() + j * co);

    HeadGradient grad;
    grad.d_weight.assign(head.weight.size(), 0.0);
    grad.d_bias.assign(head.bias.size(), 0.0);
    grad.prediction = LabelField(gt.h, gt.w, refs.classes);

    std::vector<double> d_t_emb(n_t * co, 0.0), d_r_emb(n_r * co, 0.0);
    std::vector<double> s(n_r), ds(n_r), dz(n_r);

    for (size_t i = 0; i < n_t; ++i) {
        const double* f_i = t_emb.data() + i * co;
        for (size_t j = 0; j < n_r; ++j) {
            double dot = 0.0;
            const double* f_j = r_emb.data() + j * co;
            for (int k = 0; k < co; ++k) dot += f_i[k] * f_j[k];
            s[j] = dot / temperature;
        }
        softmax_inplace(s);

        double* pred = grad.prediction.probs.data() + i * refs.classes;
        for (size_t j = 0; j < n_r; ++j)
            for (int c = 0; c < refs.classes; ++c) pred[c] += s[j] * refs.labels[j][c];

        const int cls = one_hot_class(gt.probs.data() + i * gt.classes, gt.classes);
        const double p = pred[cls];
        grad.loss -= std::log(std::max(p, kProbFloor));
        if (p <= kProbFloor) continue;  // loss is flat below the floor

        // d loss / d s_j, then the softmax Jacobian, then the embeddings.
        const double dp = -1.0 / p;
        double inner = 0.0;
        for (size_t j = 0; j < n_r; ++j) {
            ds[j] = dp * refs.labels[j][cls];
            inner += s[j] * ds[j];
        }
        for (size_t j = 0; j < n_r; ++j) dz[j] = s[j] * (ds[j] - inner) / temperature;

        double* d_fi = d_t_emb.data() + i * co;
        for (size_t j = 0; j < n_r; ++j) {
            const double a = dz[j];
            if (a == 0.0) continue;
            const double* f_j = r_emb.data() + j * co;
            double* d_fj = d_r_emb.data() + j * co;
            for (int k = 0; k < co; ++k) {
                d_fi[k] += a * f_j[k];
                d_fj[k] += a * f_i[k];
            }
        }
    }

    // Backprop through the unit normalization and the affine map, both sides.
    std::vector<double> d_proj(co);
    auto accumulate = [&](const double* proj, const double* emb, const double* d_emb,
                          const float* base) {
        double norm_sq = 0.0;
        for (int k = 0; k < co; ++k) norm_sq += proj[k] * proj[k];
        if (norm_sq <= 0.0) return;  // degenerate cell was pinned to e1; no gradient flows
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        double dot = 0.0;
        for (int k = 0; k < co; ++k) dot += d_emb[k] * emb[k];
        for (int k = 0; k < co; ++k) d_proj[k] = (d_emb[k] - dot * emb[k]) * inv_norm;

        for (int in = 0; in < head.c_in; ++in) {
            const double b = base[in];
            double* dw = grad.d_weight.data() + static_cast<size_t>(in) * co;
            for (int k = 0; k < co; ++k) dw[k] += b * d_proj[k];
        }
        for (int k = 0; k < co; ++k) grad.d_bias[k] += d_proj[k];
    };

    for (size_t i = 0; i < n_t; ++i)
        accumulate(t_proj.data() + i * co, t_emb.data() + i * co, d_t_emb.data() + i * co,
                   target_base.data.data() + i * head.c_in);
    for (size_t j = 0; j < n_r; ++j)
        accumulate(r_proj.data() + j * co, r_emb.data() + j * co, d_r_emb.data() + j * co,
                   refs.cells[j]);

    return grad;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (snippet_length < 2) throw std::invalid_argument("TrainConfig: snippet length must be >= 2");
    if (!(temperature > 0.0)) throw std::invalid_argument("TrainConfig: temperature must be positive");
    training_reference_offsets(strategy_tag);  // validates the tag
}

std::vector<int> training_reference_offsets(const std::string& tag) {
    SamplingStrategy s;
    if (tag == "1frame")
        s = SamplingStrategy::previous();
    else if (tag == "3frames")
        s = SamplingStrategy::consecutive(3);
    else if (tag == "9frames")
        s = SamplingStrategy::consecutive(9);
    else if (tag == "uniform")
        s = SamplingStrategy::uniform(9, 40);
    else if (tag == "sparse")
        s = SamplingStrategy::sparse_dense();
    else
        throw std::invalid_argument("training: unknown strategy tag '" + tag + "'");

    // Recover pure offsets from the schedule far from the clipping boundary.
    constexpr int kProbe = 1000;
    std::vector<int> offsets;
    for (const ReferenceSpec& r : select_references(kProbe, s)) offsets.push_back(kProbe - r.frame_index);
    return offsets;
}

TrainResult train_head(const std::vector<TrainingSequence>& sequences,
                       const ProjectionHead& initial_head, const TrainConfig& cfg) {
    cfg.validate();
    if (sequences.empty()) throw std::invalid_argument("train_head: no training sequences");
    for (const TrainingSequence& seq : sequences) {
        if (seq.base_features.size() < 2)
            throw std::invalid_argument("train_head: sequences need at least 2 frames");
        if (seq.base_features.size() != seq.gt_fields.size())
            throw std::invalid_argument("train_head: features/annotations length mismatch");
    }

    const std::vector<int> offsets = training_reference_offsets(cfg.strategy_tag);
    std::mt19937 rng(cfg.seed);

    TrainResult result;
    result.head = initial_head;
    result.epoch_loss.reserve(cfg.epochs);

    std::vector<double> acc_w(initial_head.weight.size());
    std::vector<double> acc_b(initial_head.bias.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(acc_w.begin(), acc_w.end(), 0.0);
        std::fill(acc_b.begin(), acc_b.end(), 0.0);
        double epoch_loss = 0.0;
        size_t epoch_cells = 0;

        for (const TrainingSequence& seq : sequences) {
            const int frames = static_cast<int>(seq.base_features.size());
            const int snippet = std::min(cfg.snippet_length, frames);
            const int max_start = frames - snippet;
            const int start =
                max_start > 0 ? std::uniform_int_distribution<int>(0, max_start)(rng) : 0;
            const int target = start + snippet - 1;

            std::vector<TrainReference> refs;
            std::vector<int> used;
            for (int off : offsets) {
                const int idx = std::max(target - off, start);
                if (std::find(used.begin(), used.end(), idx) != used.end()) continue;
                used.push_back(idx);
                refs.push_back({&seq.base_features[idx], &seq.gt_fields[idx]});
            }

            HeadGradient g = head_gradient(seq.base_features[target], refs, result.head,
                                           seq.gt_fields[target], cfg.temperature);
            if (!std::isfinite(g.loss))
                throw std::runtime_error("train_head: non-finite loss at epoch " +
                                         std::to_string(epoch));
            for (size_t i = 0; i < acc_w.size(); ++i) acc_w[i] += g.d_weight[i];
            for (size_t i = 0; i < acc_b.size(); ++i) acc_b[i] += g.d_bias[i];
            epoch_loss += g.loss;
            epoch_cells += seq.base_features[target].cells();
        }

        const double scale = cfg.learning_rate / static_cast<double>(epoch_cells);
        for (size_t i = 0; i < acc_w.size(); ++i) result.head.weight[i] -= scale * acc_w[i];
        for (size_t i = 0; i < acc_b.size(); ++i) result.head.bias[i] -= scale * acc_b[i];
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_cells));
    }
    return result;
}

}  // namespace tvos
