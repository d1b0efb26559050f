#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tvos/emb1.hpp"
#include "tvos/feature_grid.hpp"
#include "tvos/image.hpp"

namespace tvos {

/// Source of per-frame appearance embeddings. Implementations must be
/// deterministic: the same frame yields a bit-identical grid.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual FeatureGrid embed(const ImageU8& frame, int frame_index, int stride) const = 0;
    virtual int channels() const = 0;
};

/// Handcrafted 6-channel trunk: per stride cell the means of R, G, B and of
/// the Sobel x/y gradient magnitudes, plus the grayscale standard deviation,
/// unit-normalized. Inputs are scaled to [0,1]; images are replicate-padded
/// to stride multiples first.
class HandcraftedProvider final : public EmbeddingProvider {
public:
    static constexpr int kChannels = 6;
    FeatureGrid embed(const ImageU8& frame, int frame_index, int stride) const override;
    int channels() const override { return kChannels; }
};

/// Grids loaded from an EMB1 container, re-normalized to unit cell vectors.
std::vector<FeatureGrid> load_embeddings(const std::string& path, int stride = 8);

/// Provider backed by pre-computed grids, one per frame index.
class FileProvider final : public EmbeddingProvider {
public:
    explicit FileProvider(std::vector<FeatureGrid> grids);
    static FileProvider from_file(const std::string& path, int stride = 8);

    FeatureGrid embed(const ImageU8& frame, int frame_index, int stride) const override;
    int channels() const override { return channels_; }
    int frame_count() const { return static_cast<int>(grids_.size()); }

private:
    std::vector<FeatureGrid> grids_;
    int channels_ = 0;
};

/// Per-cell affine projection followed by unit re-normalization.
/// Text serialization: `TVOSHEAD c_in c_out`, weight rows, then biases.
struct ProjectionHead {
    int c_in = 0;
    int c_out = 0;
    std::vector<double> weight;  // (c_in, c_out) row-major
    std::vector<double> bias;    // c_out

    ProjectionHead() = default;
    ProjectionHead(int in, int out)
        : c_in(in), c_out(out), weight(static_cast<size_t>(in) * out, 0.0), bias(out, 0.0) {}

    static ProjectionHead identity(int c_in, int c_out);
    static ProjectionHead random(int c_in, int c_out, uint32_t seed, double scale = 0.5);

    /// Projects one base vector; `projected` gets the pre-normalization affine
    /// output, `normalized` the unit-length embedding (e1 if degenerate).
    void apply_cell(const float* base, double* projected, double* normalized) const;

    FeatureGrid apply(const FeatureGrid& base) const;

    void save(const std::string& path) const;
    static ProjectionHead load(const std::string& path);
};

/// Base provider composed with a projection head.
class ProjectedProvider final : public EmbeddingProvider {
public:
    ProjectedProvider(std::shared_ptr<const EmbeddingProvider> base, ProjectionHead head);

    FeatureGrid embed(const ImageU8& frame, int frame_index, int stride) const override;
    int channels() const override { return head_.c_out; }

private:
    std::shared_ptr<const EmbeddingProvider> base_;
    ProjectionHead head_;
};

}  // namespace tvos
