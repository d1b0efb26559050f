#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "tvos/embedding.hpp"
#include "tvos/image.hpp"
#include "tvos/label_field.hpp"
#include "tvos/sampling.hpp"
#include "tvos/similarity.hpp"

namespace tvos {

/// Cached transduction history: a bounded ring of (frame, features, labels)
/// plus an optional pinned frame-0 entry that survives eviction. Frame 0
/// stores the clamped annotation; later entries store predictions.
class HistoryBank {
public:
    struct Entry {
        int frame_index = 0;
        FeatureGrid features;
        LabelField field;
    };

    explicit HistoryBank(int capacity = 41, bool pin_first = false);

    /// Appends a frame; evicts the oldest unpinned entry beyond capacity.
    /// Frames must arrive in strictly increasing order.
    void push(int frame_index, FeatureGrid features, LabelField field);

    const Entry* find(int frame_index) const;
    int size() const;
    int capacity() const { return capacity_; }

private:
    int capacity_;
    bool pin_first_;
    std::deque<Entry> entries_;
    std::optional<Entry> pinned_;
};

struct PropagationConfig {
    SamplingStrategy strategy;      // defaults to sparse-dense(4,5,40)
    SpatialParams spatial;          // sigma 8/21, temperature 0.1
    int stride = 8;
    bool harden_history = false;    // store argmaxed one-hot fields instead of soft ones
};

/// Downsamples a full-resolution id mask to a one-hot grid field: majority
/// vote per stride block, ties toward the lowest class id. The mask is
/// replicate-padded to stride multiples first. `num_classes` of 0 means
/// "derive K from the mask".
LabelField init_from_annotation(const MaskU8& mask, int stride, int num_classes = 0);

/// One application of the online diffusion: each target cell becomes the
/// similarity-weighted convex combination of the sampled reference cells'
/// stored labels. Reads only frames before t.
LabelField propagate_frame(const HistoryBank& bank, int t, const FeatureGrid& target_features,
                           const PropagationConfig& cfg);

/// Diagnostic smoothness objective between the target field and the sampled
/// reference fields (bipartite degrees from the un-normalized affinities).
double frame_energy(const HistoryBank& bank, int t, const LabelField& field,
                    const PropagationConfig& cfg);

/// Bilinear per-class upsampling followed by argmax (lowest-id ties).
MaskU8 to_mask(const LabelField& field, int out_h, int out_w);

/// Ordered, random-access frame supply for a sequence.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual int size() const = 0;
    virtual ImageU8 frame(int index) const = 0;
};

class MemoryFrames final : public FrameSource {
public:
    explicit MemoryFrames(std::vector<ImageU8> frames) : frames_(std::move(frames)) {}
    int size() const override { return static_cast<int>(frames_.size()); }
    ImageU8 frame(int index) const override { return frames_.at(index); }

private:
    std::vector<ImageU8> frames_;
};

struct SequenceResult {
    std::vector<MaskU8> masks;      // one per frame, frame 0 echoes the annotation
    std::vector<LabelField> fields; // soft fields as emitted (frame 0 = annotation field)
};

/// Runs the full online loop: embeds each frame exactly once, propagates,
/// updates the bank, and emits full-resolution masks cropped back to the
/// input size. Frames after the current one are never touched.
SequenceResult run_sequence(const FrameSource& frames, const MaskU8& first_mask,
                            const PropagationConfig& cfg, const EmbeddingProvider& provider);

}  // namespace tvos
