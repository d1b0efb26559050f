#include "tvos/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace tvos {

int padded_extent(int n, int stride) {
    if (n <= 0 || stride <= 0) throw std::invalid_argument("padded_extent: non-positive input");
    return ((n + stride - 1) / stride) * stride;
}

ImageU8 pad_to_stride(const ImageU8& img, int stride) {
    if (img.empty()) throw std::invalid_argument("pad_to_stride: empty image");
    const int ph = padded_extent(img.h, stride);
    const int pw = padded_extent(img.w, stride);
    if (ph == img.h && pw == img.w) return img;
    ImageU8 out(ph, pw, img.channels);
    for (int y = 0; y < ph; ++y) {
        const int sy = std::min(y, img.h - 1);
        for (int x = 0; x < pw; ++x) {
            const int sx = std::min(x, img.w - 1);
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

MaskU8 pad_to_stride(const MaskU8& mask, int stride) {
    if (mask.empty()) throw std::invalid_argument("pad_to_stride: empty mask");
    const int ph = padded_extent(mask.h, stride);
    const int pw = padded_extent(mask.w, stride);
    if (ph == mask.h && pw == mask.w) return mask;
    MaskU8 out(ph, pw);
    for (int y = 0; y < ph; ++y) {
        const int sy = std::min(y, mask.h - 1);
        for (int x = 0; x < pw; ++x) out.at(y, x) = mask.at(sy, std::min(x, mask.w - 1));
    }
    return out;
}

MaskU8 crop(const MaskU8& mask, int out_h, int out_w) {
    if (out_h > mask.h || out_w > mask.w) throw std::invalid_argument("crop: target larger than source");
    if (out_h == mask.h && out_w == mask.w) return mask;
    MaskU8 out(out_h, out_w);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) out.at(y, x) = mask.at(y, x);
    return out;
}

int max_label(const MaskU8& mask) {
    uint8_t m = 0;
    for (uint8_t v : mask.data) m = std::max(m, v);
    return m;
}

}  // namespace tvos
