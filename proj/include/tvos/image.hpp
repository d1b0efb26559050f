#pragma once

#include <cstdint>
#include <vector>

namespace tvos {

/// Interleaved 8-bit image, row-major, `channels` samples per pixel.
struct ImageU8 {
    int h = 0;
    int w = 0;
    int channels = 0;
    std::vector<uint8_t> data;

    ImageU8() = default;
    ImageU8(int height, int width, int chans, uint8_t fill = 0)
        : h(height), w(width), channels(chans),
          data(static_cast<size_t>(height) * width * chans, fill) {}

    uint8_t& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * w + x) * channels + c];
    }
    uint8_t at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * w + x) * channels + c];
    }
    bool empty() const { return data.empty(); }
};

/// Single-channel 8-bit label mask; pixel value = object id, 0 = background.
struct MaskU8 {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> data;

    MaskU8() = default;
    MaskU8(int height, int width, uint8_t fill = 0)
        : h(height), w(width), data(static_cast<size_t>(height) * width, fill) {}

    uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * w + x]; }
    bool empty() const { return data.empty(); }

    bool operator==(const MaskU8& o) const {
        return h == o.h && w == o.w && data == o.data;
    }
};

/// Rounds n up to the next multiple of `stride`.
int padded_extent(int n, int stride);

/// Replicate-edge padding up to the next stride multiple on each axis.
ImageU8 pad_to_stride(const ImageU8& img, int stride);
MaskU8 pad_to_stride(const MaskU8& mask, int stride);

/// Top-left crop back to the original extent.
MaskU8 crop(const MaskU8& mask, int out_h, int out_w);

/// Highest pixel value in the mask (= number of objects K for id masks).
int max_label(const MaskU8& mask);

}  // namespace tvos
