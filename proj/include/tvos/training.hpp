#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvos/embedding.hpp"
#include "tvos/feature_grid.hpp"
#include "tvos/label_field.hpp"

namespace tvos {

/// One annotated reference frame for training: base features plus the
/// ground-truth one-hot field at grid scale.
struct TrainReference {
    const FeatureGrid* features = nullptr;
    const LabelField* field = nullptr;
};

/// Appearance-only soft prediction: each target cell takes the softmax over
/// all reference cells of the embedding dot products (divided by
/// temperature) and mixes the reference labels with it. No spatial term.
LabelField predict_train(const FeatureGrid& target_features,
                         const std::vector<TrainReference>& references, double temperature);

/// Cross-entropy against one-hot ground truth, summed over target cells.
/// Probabilities are floored at 1e-12 before the log.
double training_loss(const LabelField& pred, const LabelField& gt);

struct HeadGradient {
    std::vector<double> d_weight;  // same layout as ProjectionHead::weight
    std::vector<double> d_bias;
    double loss = 0.0;
    LabelField prediction;
};

/// Analytic gradient of training_loss(predict_train(head(base), ...), gt)
/// with respect to the head parameters. Both the target and the reference
/// features pass through the head; backpropagation runs through the softmax
/// and the unit re-normalization of the head output.
HeadGradient head_gradient(const FeatureGrid& target_base,
                           const std::vector<TrainReference>& reference_bases,
                           const ProjectionHead& head, const LabelField& gt, double temperature);

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 50;
    int snippet_length = 10;
    std::string strategy_tag = "9frames";  // 1frame | 3frames | 9frames | uniform | sparse
    double temperature = 0.1;
    uint32_t seed = 1;

    void validate() const;
};

/// A fully annotated sequence in training form.
struct TrainingSequence {
    std::vector<FeatureGrid> base_features;
    std::vector<LabelField> gt_fields;
};

struct TrainResult {
    ProjectionHead head;
    std::vector<double> epoch_loss;  // mean per-cell loss per epoch
};

/// Plain fixed-rate gradient descent on the head. Each epoch draws one
/// seeded snippet per sequence, picks the reference frames named by the
/// strategy tag, accumulates the analytic gradient over all sequences, and
/// takes a single step. Throws (with the epoch index) if the loss turns
/// non-finite.
TrainResult train_head(const std::vector<TrainingSequence>& sequences,
                       const ProjectionHead& initial_head, const TrainConfig& cfg);

/// Reference frame offsets (from the target, >= 1) for a training strategy tag.
std::vector<int> training_reference_offsets(const std::string& tag);

}  // namespace tvos
